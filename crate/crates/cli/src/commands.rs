use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use decrescence::apps::{
    check_propagation_stability_with, rank_sensors, CutsetStrategy, PropagationStabilityQuery,
    SnrQuery,
};
use decrescence::cutset::{enumerate_minimal_cutsets, min_vertex_cut, validate_cutset};
use decrescence::metrics::{
    band_energy_all, frequency_response_all, lp_gain_infinite, lp_gains_all, markov_parameters,
    GainMethod, Horizon, PNorm, Spectrum,
};
use decrescence::network::{
    classify, distance_classes, is_ergodic, load_network_file, period, spectral_radius,
    strongly_connected, DistanceClasses,
};
use decrescence::random::RandomNetConfig;
use decrescence::simulate::{simulate, InputSignal};
use decrescence::verify::{
    frequency_grid, junit_xml, negation_self_test, network_suite, random_suite_with, CheckOptions,
    SuiteSettings, Theorem, VerificationReport,
};
use decrescence::{Cutset, Error, Network, NodeId, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::render::{labels, num, write_atomic, Reply, Table};

const DEFAULT_GRID: usize = 33;

pub fn load(net: &NetArgs) -> Result<Network> {
    match &net.network {
        Some(path) => load_network_file(path, net.network_format.map(Into::into)),
        None => Ok(Network::nine_node_example()),
    }
}

fn node(net: &Network, label: usize) -> Result<NodeId> {
    let id = NodeId::from_one_based(label)
        .ok_or_else(|| Error::InvalidArgument("node ids start at 1".into()))?;
    net.check_node(id)
}

fn nodes(net: &Network, labels: &[usize]) -> Result<Vec<NodeId>> {
    labels.iter().map(|&l| node(net, l)).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn check_tol(tol: f64) -> Result<CheckOptions> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    Ok(CheckOptions::with_tol(tol))
}

fn distance_cell(dc: &DistanceClasses, v: NodeId) -> String {
    dc.distance_of(v).map_or(String::new(), |d| d.to_string())
}

pub fn validate(net: &Network) -> Result<Reply> {
    let class = classify(net);
    let connected = strongly_connected(net);
    let rho = spectral_radius(net)?;
    let stochastic = class.is_stochastic();
    let ergodic = if stochastic {
        Some(is_ergodic(net)?)
    } else {
        None
    };
    let per = period(net);

    let mut parts = vec![
        if stochastic {
            "stochastic"
        } else {
            "substochastic"
        }
        .to_string(),
        if connected {
            "strongly connected".to_string()
        } else {
            "not strongly connected".to_string()
        },
        if rho < 1.0 - 1e-12 { "rho<1" } else { "rho=1" }.to_string(),
    ];
    if let Some(e) = ergodic {
        parts.push(if e { "ergodic" } else { "not ergodic" }.to_string());
    }
    let mut table = Table::new(&["property", "value"]);
    let mut row = |k: &str, v: String| table.push(vec![k.to_string(), v]);
    row("nodes", net.n().to_string());
    row("edges", net.edge_count().to_string());
    row("class", parts[0].clone());
    row("worst_row_sum", num(class.worst_row_sum));
    row("strongly_connected", connected.to_string());
    row("spectral_radius", num(rho));
    row("period", per.map_or(String::new(), |p| p.to_string()));
    row("ergodic", ergodic.map_or(String::new(), |e| e.to_string()));
    row("fingerprint", net.fingerprint());
    let json = json!({
        "n": net.n(),
        "edges": net.edge_count(),
        "class": class.kind,
        "worst_row_sum": class.worst_row_sum,
        "strongly_connected": connected,
        "spectral_radius": rho,
        "period": per,
        "ergodic": ergodic,
        "fingerprint": net.fingerprint(),
    });
    let mut reply = Reply::new(json, table);
    reply.summary.push(parts.join(", "));
    Ok(reply)
}

#[derive(Serialize)]
struct NodeGain {
    node: NodeId,
    distance: Option<usize>,
    gain: f64,
    method: GainMethod,
    iterations: usize,
    residual: f64,
}

/// Gains at every node for the given inputs.
fn gains_at(net: &Network, inputs: &[NodeId], p: PNorm, h: Horizon) -> Result<Vec<NodeGain>> {
    let dc = distance_classes(net, inputs[0])?;
    let results = match h {
        Horizon::Finite(k) => lp_gains_all(net, inputs, p, k)?,
        Horizon::Infinite => {
            if inputs.len() > 1 {
                return Err(Error::InvalidArgument(
                    "infinite-horizon gains take a single source; pass --horizon K".into(),
                ));
            }
            net.nodes()
                .map(|i| lp_gain_infinite(net, inputs[0], i, p))
                .collect::<Result<_>>()?
        }
    };
    Ok(net
        .nodes()
        .zip(results)
        .map(|(v, g)| NodeGain {
            node: v,
            distance: if inputs.len() == 1 {
                dc.distance_of(v)
            } else {
                None
            },
            gain: g.value,
            method: g.method,
            iterations: g.iterations,
            residual: g.residual,
        })
        .collect())
}

fn class_maxima(dc: &DistanceClasses, values: &[f64]) -> Vec<(usize, f64)> {
    dc.classes
        .iter()
        .map(|(&d, members)| {
            let m = members
                .iter()
                .map(|v| values[v.index()])
                .fold(f64::NEG_INFINITY, f64::max);
            (d, m)
        })
        .collect()
}

pub fn gains(net: &Network, a: &GainsArgs) -> Result<Reply> {
    let inputs = if a.inputs.is_empty() {
        vec![node(net, a.source)?]
    } else {
        nodes(net, &a.inputs)?
    };
    if a.by_distance {
        let s = inputs[0];
        let dc = distance_classes(net, s)?;
        let ps = [PNorm::ONE, PNorm::TWO, PNorm::INFINITY];
        let mut columns = Vec::new();
        for p in ps {
            let values: Vec<f64> = gains_at(net, &inputs, p, a.horizon)?
                .into_iter()
                .map(|g| g.gain)
                .collect();
            columns.push(class_maxima(&dc, &values));
        }
        let mut table = Table::new(&["distance", "nodes", "max_l1", "max_l2", "max_linf"]);
        let mut rows = Vec::new();
        for (k, (d, members)) in dc.classes.iter().enumerate() {
            let (l1, l2, linf) = (columns[0][k].1, columns[1][k].1, columns[2][k].1);
            table.push(vec![
                d.to_string(),
                labels(members),
                num(l1),
                num(l2),
                num(linf),
            ]);
            rows.push(json!({
                "distance": d, "nodes": members, "max_l1": l1, "max_l2": l2, "max_linf": linf,
            }));
        }
        let json = json!({ "source": s, "horizon": a.horizon, "rows": rows });
        let mut reply = Reply::new(json, table);
        reply.summary.push(format!(
            "maximum l_p gains per distance from node {s}, horizon {}",
            a.horizon
        ));
        return Ok(reply);
    }
    let rows = gains_at(net, &inputs, a.p, a.horizon)?;
    let mut table = Table::new(&["node", "distance", "p", "horizon", "gain", "method"]);
    for g in &rows {
        table.push(vec![
            g.node.to_string(),
            g.distance.map_or(String::new(), |d| d.to_string()),
            a.p.to_string(),
            a.horizon.to_string(),
            num(g.gain),
            to_value(&g.method).as_str().unwrap_or_default().to_string(),
        ]);
    }
    let json = json!({ "inputs": inputs, "p": a.p, "horizon": a.horizon, "rows": to_value(&rows) });
    let mut reply = Reply::new(json, table);
    reply.summary.push(format!(
        "l_{} gains from {} {}, horizon {}",
        a.p,
        if inputs.len() == 1 { "node" } else { "nodes" },
        labels(&inputs),
        a.horizon
    ));
    Ok(reply)
}

/// A gnuplot script for the table written by `gains`.
pub fn gains_plot_script(a: &GainsArgs, data: &Path) -> Result<String> {
    if a.out.format != Format::Csv {
        return Err(Error::InvalidArgument(
            "--plot-script needs --format csv".into(),
        ));
    }
    let data = data.display().to_string().replace('\'', "''");
    let image = format!("{}.png", data.trim_end_matches(".csv"));
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 800,500");
    let _ = writeln!(s, "set output '{image}'");
    let _ = writeln!(s, "set grid ytics");
    if a.by_distance {
        let _ = writeln!(s, "set xlabel 'distance from source'");
        let _ = writeln!(s, "set ylabel 'maximum gain'");
        let _ = writeln!(s, "set xtics 1");
        let _ = writeln!(
            s,
            "plot '{data}' using 1:3 with linespoints, '' using 1:4 with linespoints, '' using 1:5 with linespoints"
        );
    } else {
        let _ = writeln!(s, "set style fill solid 0.6");
        let _ = writeln!(s, "set boxwidth 0.7");
        let _ = writeln!(s, "set yrange [0:*]");
        let _ = writeln!(s, "set xlabel 'node'");
        let _ = writeln!(s, "set ylabel 'l_{} gain, horizon {}'", a.p, a.horizon);
        let _ = writeln!(s, "plot '{data}' using 0:5:xtic(1) with boxes notitle");
    }
    Ok(s)
}

pub fn sweep(net: &Network, a: &SweepArgs) -> Result<Reply> {
    let s = node(net, a.source)?;
    let dc = distance_classes(net, s)?;
    let horizons = &a.horizons.0;
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons given".into()));
    }
    if a.reference.len() > dc.classes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} reference values but only {} distance classes",
            a.reference.len(),
            dc.classes.len()
        )));
    }
    let mut table = if a.by_distance {
        Table::new(&["horizon", "distance", "max_gain"])
    } else {
        Table::new(&["horizon", "node", "distance", "gain"])
    };
    let mut rows = Vec::new();
    let mut deviations = Vec::new();
    for &k in horizons {
        let values: Vec<f64> = lp_gains_all(net, &[s], a.p, k)?
            .into_iter()
            .map(|g| g.value)
            .collect();
        if a.by_distance {
            let maxima = class_maxima(&dc, &values);
            for &(d, m) in &maxima {
                table.push(vec![k.to_string(), d.to_string(), num(m)]);
                rows.push(json!({ "horizon": k, "distance": d, "max_gain": m }));
            }
            if !a.reference.is_empty() {
                let dev = maxima
                    .iter()
                    .zip(&a.reference)
                    .map(|(&(_, m), r)| (m - r).abs())
                    .fold(0.0, f64::max);
                deviations.push((k, dev));
            }
        } else {
            for v in net.nodes() {
                let g = values[v.index()];
                table.push(vec![
                    k.to_string(),
                    v.to_string(),
                    distance_cell(&dc, v),
                    num(g),
                ]);
                rows.push(json!({
                    "horizon": k, "node": v, "distance": dc.distance_of(v), "gain": g,
                }));
            }
        }
    }
    let best = deviations
        .iter()
        .copied()
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut json = json!({ "source": s, "p": a.p, "rows": rows });
    let mut reply_summary = vec![format!(
        "l_{} gains from node {s} over {} horizons",
        a.p,
        horizons.len()
    )];
    if let Some((k, dev)) = best {
        json["deviations"] = deviations
            .iter()
            .map(|&(k, d)| json!({ "horizon": k, "deviation": d }))
            .collect();
        json["best"] = json!({ "horizon": k, "deviation": dev });
        reply_summary.push(format!(
            "closest to reference at horizon {k}: max deviation {}",
            num(dev)
        ));
    }
    let mut reply = Reply::new(json, table);
    reply.summary = reply_summary;
    Ok(reply)
}

fn cutset_row(
    net: &Network,
    sources: &[NodeId],
    target: NodeId,
    c: &Cutset,
) -> Result<(Vec<String>, Value, bool)> {
    let cert = validate_cutset(net, sources, target, c)?;
    let row = vec![
        labels(c.members()),
        c.len().to_string(),
        cert.severed.to_string(),
        labels(&cert.target_partition),
    ];
    let json = json!({
        "cutset": c,
        "severed": cert.severed,
        "partition": cert.target_partition,
    });
    Ok((row, json, cert.severed))
}

pub fn cutsets(net: &Network, a: &CutsetsArgs) -> Result<Reply> {
    let sources = nodes(net, &a.source)?;
    let target = node(net, a.target)?;
    let list = if !a.check.is_empty() {
        vec![Cutset::new(nodes(net, &a.check)?)?]
    } else if a.min {
        vec![min_vertex_cut(net, &sources, target)?]
    } else {
        enumerate_minimal_cutsets(net, &sources, target, a.limit)?
    };
    let mut table = Table::new(&["cutset", "size", "severed", "partition"]);
    let mut items = Vec::new();
    let mut all_severed = true;
    for c in &list {
        let (row, j, severed) = cutset_row(net, &sources, target, c)?;
        all_severed &= severed;
        table.push(row);
        items.push(j);
    }
    let json = json!({ "sources": sources, "target": target, "cutsets": items });
    let mut reply = Reply::new(json, table);
    reply.summary.push(format!(
        "{} cutset(s) between {} and {target}",
        list.len(),
        labels(&sources)
    ));
    if !all_severed {
        reply
            .summary
            .push(format!("the given set does not separate target {target}"));
        reply.exit = 3;
    }
    Ok(reply)
}

pub fn freq(net: &Network, a: &FreqArgs) -> Result<Reply> {
    let s = node(net, a.source)?;
    let targets: Vec<NodeId> = match a.target {
        Some(t) => vec![node(net, t)?],
        None => net.nodes().collect(),
    };
    if !a.band.is_empty() {
        let mut table = Table::new(&["omega1", "omega2", "node", "energy", "quad_error"]);
        let mut rows = Vec::new();
        for &(w1, w2) in &a.band {
            let energies = band_energy_all(net, s, w1, w2, a.tol)?;
            for &t in &targets {
                let e = &energies[t.index()];
                table.push(vec![
                    num(w1),
                    num(w2),
                    t.to_string(),
                    num(e.value),
                    num(e.quad_error_estimate),
                ]);
                rows.push(json!({
                    "omega1": w1, "omega2": w2, "node": t,
                    "energy": e.value, "quad_error_estimate": e.quad_error_estimate,
                }));
            }
        }
        return Ok(Reply::new(json!({ "source": s, "bands": rows }), table));
    }
    let omegas = if !a.omega.is_empty() {
        a.omega.clone()
    } else {
        let points = a.grid.unwrap_or(DEFAULT_GRID);
        frequency_grid(points, !classify(net).is_stochastic())
    };
    let mut table = Table::new(&["omega", "node", "re", "im", "magnitude", "phase"]);
    let mut rows = Vec::new();
    for &w in &omegas {
        let h = frequency_response_all(net, s, w)?;
        for &t in &targets {
            let z = h[t.index()];
            table.push(vec![
                num(w),
                t.to_string(),
                num(z.re),
                num(z.im),
                num(z.norm()),
                num(z.arg()),
            ]);
            rows.push(json!({
                "omega": w, "node": t, "re": z.re, "im": z.im,
                "magnitude": z.norm(), "phase": z.arg(),
            }));
        }
    }
    Ok(Reply::new(json!({ "source": s, "points": rows }), table))
}

pub fn markov(net: &Network, a: &MarkovArgs) -> Result<Reply> {
    let s = node(net, a.source)?;
    let t = node(net, a.target)?;
    let seq = markov_parameters(net, s, t, a.k)?;
    let first = seq.first_nonzero();
    let mut table = Table::new(&["k", "value"]);
    for (k, v) in seq.values.iter().enumerate() {
        table.push(vec![k.to_string(), num(*v)]);
    }
    let json = json!({
        "source": s, "target": t, "values": seq.values, "first_nonzero": first,
    });
    let mut reply = Reply::new(json, table);
    reply.summary.push(match first {
        Some(k) => format!("first nonzero at k={k}"),
        None => format!("all samples zero up to k={}", a.k),
    });
    Ok(reply)
}

/// `impulse`, `step`, `sin:OMEGA[:PHASE]` or a JSON object.
pub fn parse_signal(spec: &str) -> Result<InputSignal> {
    let spec = spec.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse signal '{spec}'"));
    let sig = if spec.starts_with('{') {
        serde_json::from_str::<InputSignal>(spec)
            .map_err(|e| Error::InvalidArgument(format!("signal JSON: {e}")))?
    } else if spec == "impulse" {
        InputSignal::impulse()
    } else if spec == "step" {
        InputSignal::step()
    } else if let Some(rest) = spec.strip_prefix("sin:") {
        let mut it = rest.split(':').map(|x| x.trim().parse::<f64>());
        let omega = it.next().ok_or_else(bad)?.map_err(|_| bad())?;
        let phase = match it.next() {
            Some(p) => p.map_err(|_| bad())?,
            None => 0.0,
        };
        if it.next().is_some() {
            return Err(bad());
        }
        InputSignal::sinusoid(omega, phase)
    } else {
        return Err(bad());
    };
    sig.validate()?;
    Ok(sig)
}

pub fn simulate_cmd(net: &Network, a: &SimulateArgs) -> Result<Reply> {
    let s = node(net, a.source)?;
    let sig = parse_signal(&a.signal)?;
    let trace = simulate(net, &BTreeMap::from([(s, sig.clone())]), a.horizon)?;
    let mut headers = vec!["k".to_string()];
    headers.extend(net.nodes().map(|v| format!("x_{v}")));
    let mut table = Table {
        headers,
        rows: Vec::new(),
    };
    for k in 0..=trace.horizon() {
        let mut row = vec![k.to_string()];
        row.extend(trace.state(k).iter().map(|x| num(*x)));
        table.push(row);
    }
    let json = json!({ "source": s, "signal": sig, "trace": trace });
    Ok(Reply::new(json, table))
}

fn theorem_set(a: &VerifyArgs) -> Result<BTreeSet<Theorem>> {
    if a.theorem.is_empty() {
        Ok(Theorem::ALL.into_iter().collect())
    } else {
        a.theorem.iter().map(|t| t.parse()).collect()
    }
}

fn status(r: &VerificationReport) -> &'static str {
    if !r.passed() {
        "FAIL"
    } else if r.cases_run == 0 {
        "SKIP"
    } else {
        "PASS"
    }
}

fn report_table(reports: &[VerificationReport]) -> Table {
    let mut table = Table::new(&[
        "theorem",
        "cases",
        "violations",
        "errors",
        "tightest_margin",
        "status",
    ]);
    for r in reports {
        table.push(vec![
            r.theorem.to_string(),
            r.cases_run.to_string(),
            r.violations.len().to_string(),
            r.errors.len().to_string(),
            r.tightest_margin.map_or(String::new(), num),
            status(r).to_string(),
        ]);
    }
    table
}

fn propstab_query(seed: u64) -> PropagationStabilityQuery {
    PropagationStabilityQuery::sampled(PNorm::TWO, PNorm::TWO, 10, 50, seed)
}

pub fn verify(a: &VerifyArgs) -> Result<Reply> {
    let opts = check_tol(a.tol)?;
    let settings = SuiteSettings::default();
    let (reports, networks, mut summary) = if a.self_test {
        let reports = negation_self_test()?;
        let silent: Vec<String> = reports
            .iter()
            .filter(|r| r.violations.is_empty())
            .map(|r| r.theorem.to_string())
            .collect();
        let line = if silent.is_empty() {
            format!(
                "self-test: all {} negated checks reported violations",
                reports.len()
            )
        } else {
            format!(
                "self-test: negated checks with no violation: {}",
                silent.join(", ")
            )
        };
        (reports, 1, vec![line])
    } else if a.random {
        let theorems = theorem_set(a)?;
        let config = RandomNetConfig {
            seed: a.seed,
            stochastic_mode: a.stochastic,
            ..RandomNetConfig::default()
        };
        let mut suite = random_suite_with(&config, &theorems, a.count, &settings, opts)?;
        if theorems.contains(&Theorem::PropStability) && !a.stochastic {
            let mut merged = VerificationReport::new(Theorem::PropStability, opts);
            for (k, net) in config.generate_many(a.count)?.iter().enumerate() {
                let q = propstab_query(a.seed.wrapping_add(k as u64));
                merged.merge(check_propagation_stability_with(net, &q, opts)?);
            }
            suite.reports.push(merged);
        }
        let kind = if a.stochastic {
            "stochastic"
        } else {
            "substochastic"
        };
        let line = format!("{} random {kind} networks, seed {}", a.count, a.seed);
        (suite.reports, suite.networks, vec![line])
    } else {
        let net = load(&NetArgs {
            network: a.network.clone(),
            network_format: a.network_format,
            example: a.example,
        })?;
        let theorems = theorem_set(a)?;
        let s = node(&net, a.source)?;
        let mut suite = network_suite(&net, s, &theorems, &settings, opts, a.seed)?;
        if theorems.contains(&Theorem::PropStability) {
            if classify(&net).is_stochastic() {
                let mut r = VerificationReport::new(Theorem::PropStability, opts);
                r.note = Some("not applicable to stochastic networks".into());
                suite.reports.push(r);
            } else {
                suite.reports.push(check_propagation_stability_with(
                    &net,
                    &propstab_query(a.seed),
                    opts,
                )?);
            }
        }
        let line = format!("network {}, source {s}", &net.fingerprint()[..12]);
        (suite.reports, 1, vec![line])
    };
    let violations: usize = reports.iter().map(|r| r.violations.len()).sum();
    let errors: usize = reports.iter().map(|r| r.errors.len()).sum();
    summary.push(format!(
        "{} checks, {violations} violations, {errors} errors, tolerance {}",
        reports.len(),
        num(a.tol)
    ));
    if let Some(path) = &a.junit {
        write_atomic(path, &junit_xml("decrescence", &reports))
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    }
    let json = json!({
        "networks": networks,
        "seed": a.seed,
        "self_test": a.self_test,
        "violations": violations,
        "errors": errors,
        "reports": to_value(&reports),
    });
    let mut reply = Reply::new(json, report_table(&reports));
    reply.summary = summary;
    reply.exit = if violations > 0 || errors > 0 { 1 } else { 0 };
    Ok(reply)
}

pub fn snr(net: &Network, a: &SnrArgs) -> Result<Reply> {
    let s = node(net, a.source)?;
    let query = match a.mode {
        SnrModeArg::Transient => {
            SnrQuery::transient(a.p, parse_signal(&a.signal)?, a.horizon, a.sigma)?
        }
        SnrModeArg::Persistent => {
            let (w1, w2) = a.band;
            if !(0.0 <= w1 && w1 < w2 && w2 <= PI) {
                return Err(Error::InvalidArgument(
                    "band must satisfy 0 <= A < B <= pi".into(),
                ));
            }
            SnrQuery::persistent(Spectrum::flat(w1, w2, a.level)?, None, a.sigma)?
        }
    };
    let candidates = if a.candidates.is_empty() {
        net.nodes().collect()
    } else {
        nodes(net, &a.candidates)?
    };
    let ranking = rank_sensors(net, s, &candidates, &query)?;
    let dc = distance_classes(net, s)?;
    let mode = query.mode.name();
    let mut table = Table::new(&["rank", "node", "distance", "mode", "snr"]);
    let mut rows = Vec::new();
    for (k, (v, value)) in ranking.iter().enumerate() {
        table.push(vec![
            (k + 1).to_string(),
            v.to_string(),
            distance_cell(&dc, *v),
            mode.to_string(),
            num(*value),
        ]);
        rows.push(json!({ "node": v, "distance": dc.distance_of(*v), "snr": value }));
    }
    let json = json!({ "source": s, "mode": query.mode, "sigma": a.sigma, "ranking": rows });
    let mut reply = Reply::new(json, table);
    reply
        .summary
        .push(format!("{mode} SNR from node {s}, sigma {}", num(a.sigma)));
    Ok(reply)
}

pub fn propstab(net: &Network, a: &PropstabArgs) -> Result<Reply> {
    let mut q = PropagationStabilityQuery::sampled(a.p, a.t, a.count, a.horizon, a.seed);
    if !a.sources.is_empty() {
        q.sources = Some(nodes(net, &a.sources)?);
    }
    if a.min_cut_only {
        q.cutset_strategy = CutsetStrategy::MinCutOnly;
    }
    let report = check_propagation_stability_with(net, &q, check_tol(a.tol)?)?;
    let mut reply = Reply::new(
        to_value(&report),
        report_table(std::slice::from_ref(&report)),
    );
    reply.summary.push(format!(
        "p = {}, t = {}, {} sampled inputs of length {}: {}",
        a.p,
        a.t,
        a.count,
        a.horizon,
        if report.passed() { "PASS" } else { "FAIL" }
    ));
    if let Some(note) = &report.note {
        reply.summary.push(note.clone());
    }
    reply.exit = if report.passed() { 0 } else { 1 };
    Ok(reply)
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::NodeOutOfRange { .. }
        | Error::DuplicateInput { .. }
        | Error::Overlap { .. }
        | Error::LengthMismatch { .. }
        | Error::ComplexInput => 2,
        Error::NoConvergence { .. } | Error::Unsettled { .. } | Error::IllConditioned { .. } => 4,
        Error::InvalidMatrix { .. }
        | Error::NotStochastic { .. }
        | Error::NotSubstochastic
        | Error::NotSevered { .. }
        | Error::TooLarge { .. }
        | Error::NoCutExists { .. }
        | Error::UnstableSystem { .. }
        | Error::SingularAtOmega { .. }
        | Error::SelfLoopSaturated { .. } => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_shorthands() {
        assert_eq!(parse_signal("impulse").unwrap(), InputSignal::impulse());
        assert_eq!(
            parse_signal("sin:0.5").unwrap(),
            InputSignal::sinusoid(0.5, 0.0)
        );
        assert_eq!(
            parse_signal("sin:0.5:1").unwrap(),
            InputSignal::sinusoid(0.5, 1.0)
        );
        let custom = parse_signal(r#"{"kind":"custom","samples":[1,2]}"#).unwrap();
        assert_eq!(custom, InputSignal::custom(vec![1.0, 2.0]));
        for bad in ["", "sin:", "sin:a", "sin:1:2:3", "square", "{"] {
            assert!(parse_signal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn error_classes() {
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::InvalidMatrix {
                row: 0,
                reason: String::new()
            }),
            3
        );
        assert_eq!(exit_code(&Error::SingularAtOmega { omega: 0.0 }), 3);
        assert_eq!(
            exit_code(&Error::Unsettled {
                residual: 1.0,
                amplitude: 1.0
            }),
            4
        );
    }

    #[test]
    fn class_maxima_per_distance() {
        let net = Network::nine_node_example();
        let dc = distance_classes(&net, NodeId::new(0)).unwrap();
        let values: Vec<f64> = (0..9).map(|k| k as f64).collect();
        let m = class_maxima(&dc, &values);
        assert_eq!(m, vec![(0, 0.0), (1, 5.0), (2, 8.0), (3, 2.0)]);
    }
}
