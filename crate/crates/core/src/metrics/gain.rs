use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::frequency::frequency_response_all;
use super::markov::{distinct_inputs, impulse_responses};
use super::opnorm::{operator_norm, NormMethod};
use super::{ConvolutionOperator, Horizon, PNorm};
use crate::error::{Error, Result};
use crate::network::{spectral_radius, Network, NodeId};

const STABILITY_MARGIN: f64 = 1e-12;
const SWEEP_POINTS: usize = 2048;
const SWEEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMethod {
    ClosedForm,
    SingularValue,
    NonnegPowerIteration,
    ResolventLimit,
    FrequencySweep,
}

impl From<NormMethod> for GainMethod {
    fn from(m: NormMethod) -> Self {
        match m {
            NormMethod::ClosedForm => GainMethod::ClosedForm,
            NormMethod::SingularValue => GainMethod::SingularValue,
            NormMethod::NonnegPowerIteration => GainMethod::NonnegPowerIteration,
        }
    }
}

/// An l_p gain with the metadata of how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainResult {
    pub value: f64,
    pub p: PNorm,
    pub horizon: Horizon,
    pub method: GainMethod,
    pub iterations: usize,
    pub residual: f64,
}

fn check_horizon(k_f: usize) -> Result<()> {
    if k_f == 0 {
        return Err(Error::invalid("horizon k_f must be at least 1"));
    }
    Ok(())
}

fn gain_from_kernels(kernels: Vec<Vec<f64>>, p: PNorm, k_f: usize) -> Result<GainResult> {
    let op = ConvolutionOperator::new(kernels, k_f)?;
    let est = operator_norm(&op, p)?;
    Ok(GainResult {
        value: est.value,
        p,
        horizon: Horizon::Finite(k_f),
        method: est.method.into(),
        iterations: est.iterations,
        residual: est.residual,
    })
}

/// Finite-horizon l_p gain from `s` to `i`.
pub fn lp_gain(net: &Network, s: NodeId, i: NodeId, p: PNorm, k_f: usize) -> Result<GainResult> {
    lp_gain_multi(net, &[s], i, p, k_f)
}

/// Finite-horizon l_p gain of the multi-input model, with the input norm
/// taken jointly over every channel and time step.
pub fn lp_gain_multi(
    net: &Network,
    inputs: &[NodeId],
    i: NodeId,
    p: PNorm,
    k_f: usize,
) -> Result<GainResult> {
    distinct_inputs(net, inputs)?;
    net.check_node(i)?;
    check_horizon(k_f)?;
    let kernels = inputs
        .iter()
        .map(|&s| {
            impulse_responses(net, s, k_f).map(|r| r.into_iter().map(|v| v[i.index()]).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    gain_from_kernels(kernels, p, k_f)
}

/// [`lp_gain_multi`] for every node as target, sharing the impulse responses.
pub fn lp_gains_all(
    net: &Network,
    inputs: &[NodeId],
    p: PNorm,
    k_f: usize,
) -> Result<Vec<GainResult>> {
    distinct_inputs(net, inputs)?;
    check_horizon(k_f)?;
    let responses = inputs
        .iter()
        .map(|&s| impulse_responses(net, s, k_f))
        .collect::<Result<Vec<_>>>()?;
    net.nodes()
        .map(|i| {
            let kernels = responses
                .iter()
                .map(|r| r.iter().map(|v| v[i.index()]).collect())
                .collect();
            gain_from_kernels(kernels, p, k_f)
        })
        .collect()
}

/// Infinite-horizon l_p gain, defined when `rho(A) < 1`.
///
/// * `p = 2`: `sup |H_i(e^{jW})|` from a 2048-point grid on `[0, pi]`
///   refined by golden-section search.
/// * every other `p`: entry `(i, s)` of `(I - A)^{-1}`.
pub fn lp_gain_infinite(net: &Network, s: NodeId, i: NodeId, p: PNorm) -> Result<GainResult> {
    net.check_node(s)?;
    net.check_node(i)?;
    let rho = spectral_radius(net)?;
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableSystem {
            spectral_radius: rho,
        });
    }
    if p.value() == 2.0 {
        return frequency_sup(net, s, i);
    }
    let (value, residual) = resolvent_entry(net, s, i)?;
    Ok(GainResult {
        value,
        p,
        horizon: Horizon::Infinite,
        method: GainMethod::ResolventLimit,
        iterations: 0,
        residual,
    })
}

fn resolvent_entry(net: &Network, s: NodeId, i: NodeId) -> Result<(f64, f64)> {
    let n = net.n();
    let m = DMatrix::<f64>::identity(n, n) - net.matrix();
    let mut e = DVector::zeros(n);
    e[s.index()] = 1.0;
    let v = m
        .clone()
        .lu()
        .solve(&e)
        .ok_or(Error::SingularAtOmega { omega: 0.0 })?;
    let residual = (&m * &v - &e).amax();
    Ok((v[i.index()], residual))
}

fn frequency_sup(net: &Network, s: NodeId, i: NodeId) -> Result<GainResult> {
    let mag = |w: f64| -> Result<f64> { Ok(frequency_response_all(net, s, w)?[i.index()].norm()) };
    let step = std::f64::consts::PI / (SWEEP_POINTS - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..SWEEP_POINTS {
        let v = mag(k as f64 * step)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    let mut lo = best.0.saturating_sub(1) as f64 * step;
    let mut hi = ((best.0 + 1).min(SWEEP_POINTS - 1)) as f64 * step;
    let mut value = best.1;
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut evaluations = SWEEP_POINTS;
    let mut c = hi - golden * (hi - lo);
    let mut d = lo + golden * (hi - lo);
    let (mut fc, mut fd) = (mag(c)?, mag(d)?);
    while hi - lo > SWEEP_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - golden * (hi - lo);
            fc = mag(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + golden * (hi - lo);
            fd = mag(d)?;
        }
        evaluations += 1;
    }
    value = value.max(fc).max(fd);
    Ok(GainResult {
        value,
        p: PNorm::TWO,
        horizon: Horizon::Infinite,
        method: GainMethod::FrequencySweep,
        iterations: evaluations,
        residual: hi - lo,
    })
}
