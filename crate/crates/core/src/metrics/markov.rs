use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Network, NodeId};

/// Impulse-response samples `M(k) = e_target^T A^k e_source`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovSequence {
    pub source: NodeId,
    pub target: NodeId,
    pub values: Vec<f64>,
}

impl MarkovSequence {
    /// Index of the first nonzero sample, if any.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.values.iter().position(|&m| m != 0.0)
    }
}

/// The vectors `A^k e_s` for `k = 0..count`, one row per `k`.
pub fn impulse_responses(net: &Network, s: NodeId, count: usize) -> Result<Vec<Vec<f64>>> {
    net.check_node(s)?;
    let mut out = Vec::with_capacity(count);
    let mut v = vec![0.0; net.n()];
    v[s.index()] = 1.0;
    for k in 0..count {
        if k > 0 {
            v = net.apply(&v);
        }
        out.push(v.clone());
    }
    Ok(out)
}

pub fn markov_parameters(
    net: &Network,
    s: NodeId,
    i: NodeId,
    k_max: usize,
) -> Result<MarkovSequence> {
    net.check_node(i)?;
    let values = impulse_responses(net, s, k_max + 1)?
        .into_iter()
        .map(|v| v[i.index()])
        .collect();
    Ok(MarkovSequence {
        source: s,
        target: i,
        values,
    })
}

pub(crate) fn distinct_inputs(net: &Network, inputs: &[NodeId]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::invalid("at least one input node is required"));
    }
    for (k, &u) in inputs.iter().enumerate() {
        net.check_node(u)?;
        if inputs[..k].contains(&u) {
            return Err(Error::DuplicateInput { node: u });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::distance_classes;

    #[test]
    fn identity_at_zero() {
        let net = Network::nine_node_example();
        for v in net.nodes() {
            assert_eq!(markov_parameters(&net, v, v, 0).unwrap().values, vec![1.0]);
        }
    }

    #[test]
    fn two_node_hand_powers() {
        let net = Network::from_rows(vec![vec![0.5, 0.1], vec![0.4, 0.5]]).unwrap();
        let m = markov_parameters(&net, NodeId::new(0), NodeId::new(1), 2).unwrap();
        // A^2[1][0] = 0.4*0.5 + 0.5*0.4
        assert_eq!(m.values[0], 0.0);
        assert!((m.values[1] - 0.4).abs() < 1e-15);
        assert!((m.values[2] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn first_nonzero_index_is_graph_distance() {
        let net = Network::nine_node_example();
        let s = NodeId::new(0);
        let dc = distance_classes(&net, s).unwrap();
        for i in net.nodes() {
            let m = markov_parameters(&net, s, i, 12).unwrap();
            assert_eq!(m.first_nonzero(), dc.distance_of(i), "node {i}");
            assert!(m.values.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        let m9 = markov_parameters(&net, s, NodeId::new(8), 2).unwrap();
        assert_eq!(&m9.values[..2], &[0.0, 0.0]);
        assert!(m9.values[2] > 0.0);
    }
}
