mod common;

use common::{
    brute_force_minimal_cutsets, max_disjoint_paths, sparse, substochastic, successor_lists,
};
use decrescence::cutset::{
    enumerate_minimal_cutsets, min_vertex_cut, target_partition, validate_cutset,
};
use decrescence::network::distance_classes;
use decrescence::{Cutset, Error, Network, NodeId};
use proptest::prelude::*;

fn pick(net: &Network, a: u64, b: u64) -> (NodeId, NodeId) {
    let n = net.n();
    let s = a as usize % n;
    let t = (s + 1 + b as usize % (n - 1)) % n;
    (NodeId::new(s), NodeId::new(t))
}

fn indices(c: &Cutset) -> Vec<usize> {
    c.members().iter().map(|v| v.index()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn enumeration_matches_brute_force(seed in any::<u64>(), density in 0.1f64..0.6, a in any::<u64>(), b in any::<u64>(), two in any::<bool>()) {
        let net = sparse(seed, 11, density);
        let (s, t) = pick(&net, a, b);
        let mut sources = vec![s];
        if two && net.n() > 3 {
            let extra = (0..net.n()).map(NodeId::new).find(|v| *v != s && *v != t && v.index() != a as usize % 7);
            sources.extend(extra);
        }
        let idx: Vec<usize> = sources.iter().map(|v| v.index()).collect();
        let mut expected = brute_force_minimal_cutsets(&net, &idx, t.index());
        // the empty set is not a cutset
        expected.retain(|c| !c.is_empty());
        let got: Vec<Vec<usize>> = enumerate_minimal_cutsets(&net, &sources, t, None)
            .unwrap()
            .iter()
            .map(indices)
            .collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn enumerated_cutsets_are_minimal(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let net = substochastic(seed);
        let (s, t) = pick(&net, a, b);
        for c in enumerate_minimal_cutsets(&net, &[s], t, None).unwrap() {
            prop_assert!(validate_cutset(&net, &[s], t, &c).unwrap().severed);
            for drop in c.members() {
                let smaller = Cutset::new(c.members().iter().copied().filter(|v| v != drop));
                if let Ok(smaller) = smaller {
                    prop_assert!(!validate_cutset(&net, &[s], t, &smaller).unwrap().severed);
                }
            }
        }
    }

    #[test]
    fn min_cut_size_is_path_packing_number(seed in any::<u64>(), density in 0.15f64..0.5, a in any::<u64>(), b in any::<u64>()) {
        let net = sparse(seed, 8, density);
        let (s, t) = pick(&net, a, b);
        match min_vertex_cut(&net, &[s], t) {
            Err(Error::NoCutExists { .. }) => prop_assert!(net.has_edge(s, t)),
            Err(Error::InvalidArgument(_)) => prop_assert_eq!(max_disjoint_paths(&net, s.index(), t.index()), 0),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok(c) => {
                prop_assert!(!net.has_edge(s, t));
                let paths = max_disjoint_paths(&net, s.index(), t.index());
                prop_assert_eq!(c.len(), paths);
                prop_assert!(validate_cutset(&net, &[s], t, &c).unwrap().severed);
            }
        }
    }

    #[test]
    fn distance_shells_separate_farther_targets(seed in any::<u64>(), a in any::<u64>()) {
        let net = substochastic(seed);
        let s = NodeId::new(a as usize % net.n());
        let dc = distance_classes(&net, s).unwrap();
        for d in 1..dc.max_distance() {
            let shell = Cutset::new(dc.class(d).iter().copied()).unwrap();
            for far in d + 1..=dc.max_distance() {
                for &t in dc.class(far) {
                    prop_assert!(validate_cutset(&net, &[s], t, &shell).unwrap().severed);
                }
            }
        }
    }

    #[test]
    fn target_partition_is_closed(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let net = substochastic(seed);
        let (s, t) = pick(&net, a, b);
        let succ = successor_lists(&net);
        for c in enumerate_minimal_cutsets(&net, &[s], t, Some(20)).unwrap() {
            let z = target_partition(&net, &[s], &c, t).unwrap();
            prop_assert!(z.contains(&t));
            prop_assert!(!z.contains(&s));
            prop_assert!(z.iter().all(|v| !c.contains(*v)));
            for (j, out) in succ.iter().enumerate() {
                let inside = z.iter().any(|v| v.index() == j) || c.contains(NodeId::new(j));
                if !inside {
                    prop_assert!(out.iter().all(|l| !z.iter().any(|v| v.index() == *l)),
                        "edge {} -> Z from outside Z and C", j + 1);
                }
            }
        }
    }
}

#[test]
fn example_net_has_one_minimal_cutset_to_node_nine() {
    let net = Network::nine_node_example();
    let id = |l| NodeId::from_one_based(l).unwrap();
    let all = enumerate_minimal_cutsets(&net, &[id(1)], id(9), None).unwrap();
    let expected = brute_force_minimal_cutsets(&net, &[0], 8);
    assert_eq!(all.iter().map(indices).collect::<Vec<_>>(), expected);
    assert_eq!(expected, vec![vec![3, 4, 5]]);
    assert_eq!(min_vertex_cut(&net, &[id(1)], id(9)).unwrap().len(), 3);
    assert_eq!(max_disjoint_paths(&net, 0, 8), 3);
}
