mod common;

use common::{id, markov_dense, rel_diff, resolvent};
use decrescence::cutset::{target_partition, validate_cutset};
use decrescence::metrics::{
    band_energy, frequency_response, lp_gain_infinite, lp_gains_all, markov_parameters,
};
use decrescence::network::{
    classify, distance_classes, period, spectral_radius, strongly_connected,
};
use decrescence::{Cutset, Error, Network, NodeId, PNorm};

/// Per-distance maxima of the example's gain table, rounded to 4 decimals.
const L1_TABLE: [f64; 4] = [1.2122, 0.4098, 0.3328, 0.2348];
const L2_TABLE: [f64; 4] = [1.1676, 0.3654, 0.2994, 0.2113];

fn class_max(net: &Network, values: &[f64]) -> Vec<f64> {
    let dc = distance_classes(net, id(1)).unwrap();
    (0..=dc.max_distance())
        .map(|d| {
            dc.class(d)
                .iter()
                .map(|v| values[v.index()])
                .fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn structure_of_the_nine_node_net() {
    let net = Network::nine_node_example();
    assert_eq!(net.n(), 9);
    assert_eq!(net.edge_count(), 27);
    assert!(!classify(&net).is_stochastic());
    assert!(strongly_connected(&net));
    assert_eq!(period(&net), Some(3));
    assert!((spectral_radius(&net).unwrap() - 0.7738389220018891).abs() < 1e-12);
    let dc = distance_classes(&net, id(1)).unwrap();
    let labels = |d| {
        dc.class(d)
            .iter()
            .map(|v: &NodeId| v.one_based())
            .collect::<Vec<_>>()
    };
    assert_eq!(labels(0), [1]);
    assert_eq!(labels(1), [4, 5, 6]);
    assert_eq!(labels(2), [7, 8, 9]);
    assert_eq!(labels(3), [2, 3]);
}

#[test]
fn middle_shell_separates_node_nine() {
    let net = Network::nine_node_example();
    let shell = Cutset::from_labels(&[4, 5, 6]).unwrap();
    let z = target_partition(&net, &[id(1)], &shell, id(9)).unwrap();
    let labels: Vec<usize> = z.iter().map(|v| v.one_based()).collect();
    assert_eq!(labels, [2, 3, 7, 8, 9]);
    let partial = Cutset::from_labels(&[4, 5]).unwrap();
    assert!(
        !validate_cutset(&net, &[id(1)], id(9), &partial)
            .unwrap()
            .severed
    );
    assert!(matches!(
        target_partition(&net, &[id(1)], &partial, id(9)),
        Err(Error::NotSevered { .. })
    ));
}

#[test]
fn markov_sequence_starts_at_the_graph_distance() {
    let net = Network::nine_node_example();
    let m = markov_parameters(&net, id(1), id(9), 30).unwrap();
    assert_eq!(m.first_nonzero(), Some(2));
    let dense = markov_dense(&net, id(1), id(9), 30);
    for (a, b) in m.values.iter().zip(&dense) {
        assert!((a - b).abs() <= 1e-15);
    }
}

#[test]
fn infinite_horizon_l1_is_the_resolvent() {
    let net = Network::nine_node_example();
    let r = resolvent(&net);
    let gains: Vec<f64> = net
        .nodes()
        .map(|i| lp_gain_infinite(&net, id(1), i, PNorm::ONE).unwrap().value)
        .collect();
    for i in net.nodes() {
        assert!(rel_diff(gains[i.index()], r[(i.index(), 0)]) <= 1e-13);
    }
    let expected = [
        1.214363724943578,
        0.41435195162071303,
        0.33617059336235633,
        0.23709996659540084,
    ];
    for (got, want) in class_max(&net, &gains).iter().zip(expected) {
        assert!(rel_diff(*got, want) <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn horizon_19_matches_the_four_decimal_table() {
    let net = Network::nine_node_example();
    let l1: Vec<f64> = lp_gains_all(&net, &[id(1)], PNorm::ONE, 19)
        .unwrap()
        .iter()
        .map(|g| g.value)
        .collect();
    let l2: Vec<f64> = lp_gains_all(&net, &[id(1)], PNorm::TWO, 19)
        .unwrap()
        .iter()
        .map(|g| g.value)
        .collect();
    let linf: Vec<f64> = lp_gains_all(&net, &[id(1)], PNorm::INFINITY, 19)
        .unwrap()
        .iter()
        .map(|g| g.value)
        .collect();
    assert_eq!(l1, linf);
    for (got, want) in class_max(&net, &l1).iter().zip(L1_TABLE) {
        assert!((got - want).abs() <= 5e-5, "l1 {got} vs {want}");
    }
    for (got, want) in class_max(&net, &l2).iter().zip(L2_TABLE) {
        assert!((got - want).abs() <= 5e-5, "l2 {got} vs {want}");
    }
}

#[test]
fn node_nine_never_exceeds_the_middle_shell() {
    let net = Network::nine_node_example();
    let shell = [id(4), id(5), id(6)];
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let p = PNorm::new(p).unwrap();
        for k_f in [1, 2, 3, 5, 10, 19, 50] {
            let g: Vec<f64> = lp_gains_all(&net, &[id(1)], p, k_f)
                .unwrap()
                .iter()
                .map(|g| g.value)
                .collect();
            let best = shell.iter().map(|v| g[v.index()]).fold(0.0, f64::max);
            assert!(g[8] <= best + 1e-12, "p={p} k_f={k_f}: {} > {best}", g[8]);
            let classes = class_max(&net, &g);
            assert!(
                classes.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "p={p} k_f={k_f}: {classes:?}"
            );
        }
    }
    for omega in [0.0, 0.2, 1.0, 2.0, 3.1] {
        let h = |v: NodeId| {
            frequency_response(&net, id(1), v, omega)
                .unwrap()
                .magnitude()
        };
        let best = shell.iter().map(|&v| h(v)).fold(0.0, f64::max);
        assert!(h(id(9)) <= best + 1e-12);
    }
    for (a, b) in [(0.0, 0.5), (0.1, 1.0), (1.0, std::f64::consts::PI)] {
        let e = |v: NodeId| band_energy(&net, id(1), v, a, b, 1e-10).unwrap().value;
        let best = shell.iter().map(|&v| e(v)).fold(0.0, f64::max);
        assert!(e(id(9)) <= best + 1e-9);
    }
}
