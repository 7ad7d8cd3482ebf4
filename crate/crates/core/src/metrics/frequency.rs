use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{classify, Network, NodeId};

const RESIDUAL_TOL: f64 = 1e-10;

/// `H_i(e^{jW})` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyPoint {
    pub omega: f64,
    pub value: Complex64,
}

impl FrequencyPoint {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    pub fn phase(&self) -> f64 {
        self.value.arg()
    }
}

/// Frequency response from `s` to `i`, `e_i^T (e^{jW} I - A)^{-1} e_s`.
///
/// `omega` may lie anywhere in `[-pi, pi]`; for real `A` the response at
/// `-W` is the conjugate of the response at `W`.
pub fn frequency_response(
    net: &Network,
    s: NodeId,
    i: NodeId,
    omega: f64,
) -> Result<FrequencyPoint> {
    net.check_node(i)?;
    let all = frequency_response_all(net, s, omega)?;
    Ok(FrequencyPoint {
        omega,
        value: all[i.index()],
    })
}

/// The response at every node from one linear solve.
pub fn frequency_response_all(net: &Network, s: NodeId, omega: f64) -> Result<Vec<Complex64>> {
    net.check_node(s)?;
    if !omega.is_finite() || omega.abs() > std::f64::consts::PI {
        return Err(Error::invalid(format!(
            "frequency must lie in [-pi, pi], got {omega}"
        )));
    }
    if omega == 0.0 && classify(net).is_stochastic() {
        return Err(Error::SingularAtOmega { omega });
    }
    let n = net.n();
    let z = Complex64::from_polar(1.0, omega);
    let m = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
        let a = Complex64::new(-net.matrix()[(r, c)], 0.0);
        if r == c {
            a + z
        } else {
            a
        }
    });
    let mut e = DVector::<Complex64>::zeros(n);
    e[s.index()] = Complex64::new(1.0, 0.0);
    let v = m
        .clone()
        .lu()
        .solve(&e)
        .ok_or(Error::SingularAtOmega { omega })?;
    let residual = (&m * &v - &e).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(residual <= RESIDUAL_TOL) || v.iter().any(|c| !c.is_finite()) {
        return Err(Error::IllConditioned { omega, residual });
    }
    Ok(v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pure_delay_has_unit_magnitude() {
        let net = Network::from_rows(vec![vec![0.0]]).unwrap();
        let s = NodeId::new(0);
        for k in 0..=16 {
            let w = PI * k as f64 / 16.0;
            let h = frequency_response(&net, s, s, w).unwrap();
            assert!((h.magnitude() - 1.0).abs() < 1e-14);
            // e^{-jW}
            assert!((h.value - Complex64::from_polar(1.0, -w)).norm() < 1e-14);
        }
    }

    #[test]
    fn scalar_resolvent_at_dc() {
        let net = Network::from_rows(vec![vec![0.5]]).unwrap();
        let s = NodeId::new(0);
        let h = frequency_response(&net, s, s, 0.0).unwrap();
        assert!((h.value - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        let h = frequency_response(&net, s, s, PI).unwrap();
        assert!((h.magnitude() - 1.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn conjugate_symmetry() {
        let net = Network::nine_node_example();
        let s = NodeId::new(0);
        let a = frequency_response_all(&net, s, 0.7).unwrap();
        let b = frequency_response_all(&net, s, -0.7).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn stochastic_at_dc_is_singular() {
        let net = Network::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            frequency_response(&net, NodeId::new(0), NodeId::new(1), 0.0),
            Err(Error::SingularAtOmega { .. })
        ));
        assert!(frequency_response(&net, NodeId::new(0), NodeId::new(1), 0.3).is_ok());
    }

    #[test]
    fn out_of_range_frequency() {
        let net = Network::from_rows(vec![vec![0.5]]).unwrap();
        assert!(frequency_response(&net, NodeId::new(0), NodeId::new(0), 4.0).is_err());
    }

    #[test]
    fn example_cutset_majorizes_node_nine() {
        let net = Network::nine_node_example();
        let s = NodeId::new(0);
        for k in 0..=64 {
            let h = frequency_response_all(&net, s, PI * k as f64 / 64.0).unwrap();
            let cut = [3, 4, 5].iter().map(|&j| h[j].norm()).fold(0.0, f64::max);
            assert!(h[8].norm() <= cut + 1e-12);
        }
    }
}
