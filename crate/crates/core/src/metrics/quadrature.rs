//! Adaptive Simpson quadrature and band energies of `|H|^2`.

use serde::Serialize;

use super::frequency::frequency_response_all;
use crate::error::{Error, Result};
use crate::network::{Network, NodeId};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
const MAX_DEPTH: usize = 40;
const INITIAL_PANELS: usize = 8;

/// Integral of `|H_i|^2` over `[omega1, omega2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandEnergy {
    pub omega1: f64,
    pub omega2: f64,
    pub value: f64,
    pub quad_error_estimate: f64,
}

/// A nonnegative piecewise-constant function on `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    edges: Vec<f64>,
    levels: Vec<f64>,
}

impl Spectrum {
    /// `levels[k]` applies on `[edges[k], edges[k+1]]`.
    pub fn new(edges: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if edges.len() != levels.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: levels.len() + 1,
                actual: edges.len(),
            });
        }
        if edges
            .iter()
            .any(|w| !(0.0..=std::f64::consts::PI).contains(w))
        {
            return Err(Error::invalid("spectrum edges must lie in [0, pi]"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("spectrum edges must be strictly increasing"));
        }
        if levels.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::invalid(
                "spectrum levels must be finite and nonnegative",
            ));
        }
        Ok(Spectrum { edges, levels })
    }

    /// `level` on `[omega1, omega2]`, zero elsewhere.
    pub fn flat(omega1: f64, omega2: f64, level: f64) -> Result<Self> {
        Spectrum::new(vec![omega1, omega2], vec![level])
    }

    pub fn zero() -> Self {
        Spectrum {
            edges: vec![0.0, std::f64::consts::PI],
            levels: vec![0.0],
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, &l)| (self.edges[k], self.edges[k + 1], l))
    }

    pub fn level_at(&self, omega: f64) -> f64 {
        self.pieces()
            .find(|&(a, b, _)| a <= omega && omega <= b)
            .map_or(0.0, |(_, _, l)| l)
    }
}

struct Simpson<'a, F> {
    f: &'a mut F,
    error: f64,
    exhausted: bool,
}

impl<F: FnMut(f64) -> Result<Vec<f64>>> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: &[f64],
        fm: &[f64],
        fb: &[f64],
        whole: Vec<f64>,
        tol: f64,
        depth: usize,
    ) -> Result<Vec<f64>> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = (self.f)(lm)?;
        let frm = (self.f)(rm)?;
        let left = simpson(a, m, fa, &flm, fm);
        let right = simpson(m, b, fm, &frm, fb);
        let delta = left
            .iter()
            .zip(&right)
            .zip(&whole)
            .map(|((l, r), w)| (l + r - w).abs())
            .fold(0.0, f64::max);
        if delta <= 15.0 * tol || depth >= MAX_DEPTH {
            if delta > 15.0 * tol {
                self.exhausted = true;
            }
            self.error += delta / 15.0;
            return Ok(left
                .iter()
                .zip(&right)
                .zip(&whole)
                .map(|((l, r), w)| l + r + (l + r - w) / 15.0)
                .collect());
        }
        let l = self.refine(a, m, fa, &flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(m, b, fm, &frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
    }
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let h = (b - a) / 6.0;
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((x, y), z)| h * (x + 4.0 * y + z))
        .collect()
}

/// Integrates a vector-valued function over `[a, b]` to absolute tolerance
/// `tol` in every component. Returns the integral and an error estimate.
pub fn adaptive_simpson_vec<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let nodes: Vec<f64> = (0..=INITIAL_PANELS)
        .map(|k| {
            if k == INITIAL_PANELS {
                b
            } else {
                a + h * k as f64
            }
        })
        .collect();
    let mut values = nodes.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut state = Simpson {
        f: &mut f,
        error: 0.0,
        exhausted: false,
    };
    let mut total: Option<Vec<f64>> = None;
    for k in 0..INITIAL_PANELS {
        let (x0, x1) = (nodes[k], nodes[k + 1]);
        let fm = (state.f)(0.5 * (x0 + x1))?;
        let (fa, fb) = (std::mem::take(&mut values[k]), values[k + 1].clone());
        let whole = simpson(x0, x1, &fa, &fm, &fb);
        let part = state.refine(x0, x1, &fa, &fm, &fb, whole, tol / INITIAL_PANELS as f64, 0)?;
        total = Some(match total {
            None => part,
            Some(t) => t.iter().zip(&part).map(|(x, y)| x + y).collect(),
        });
    }
    if state.exhausted && state.error > tol {
        return Err(Error::NoConvergence {
            what: "adaptive Simpson quadrature",
            iterations: MAX_DEPTH,
            residual: state.error,
        });
    }
    Ok((total.unwrap_or_default(), state.error))
}

/// Scalar form of [`adaptive_simpson_vec`].
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (v, err) = adaptive_simpson_vec(|x| f(x).map(|y| vec![y]), a, b, tol)?;
    Ok((v[0], err))
}

fn check_band(omega1: f64, omega2: f64) -> Result<()> {
    if !(0.0 <= omega1 && omega1 < omega2 && omega2 <= std::f64::consts::PI) {
        return Err(Error::invalid(format!(
            "band must satisfy 0 <= omega1 < omega2 <= pi, got [{omega1}, {omega2}]"
        )));
    }
    Ok(())
}

fn squared_magnitudes(net: &Network, s: NodeId, omega: f64) -> Result<Vec<f64>> {
    Ok(frequency_response_all(net, s, omega)?
        .iter()
        .map(|h| h.norm_sqr())
        .collect())
}

pub fn band_energy(
    net: &Network,
    s: NodeId,
    i: NodeId,
    omega1: f64,
    omega2: f64,
    tol: f64,
) -> Result<BandEnergy> {
    net.check_node(s)?;
    net.check_node(i)?;
    check_band(omega1, omega2)?;
    let (value, err) = adaptive_simpson(
        |w| squared_magnitudes(net, s, w).map(|v| v[i.index()]),
        omega1,
        omega2,
        tol,
    )?;
    Ok(BandEnergy {
        omega1,
        omega2,
        value,
        quad_error_estimate: err,
    })
}

/// Band energies at every node, integrated together.
pub fn band_energy_all(
    net: &Network,
    s: NodeId,
    omega1: f64,
    omega2: f64,
    tol: f64,
) -> Result<Vec<BandEnergy>> {
    net.check_node(s)?;
    check_band(omega1, omega2)?;
    let (values, err) =
        adaptive_simpson_vec(|w| squared_magnitudes(net, s, w), omega1, omega2, tol)?;
    Ok(values
        .into_iter()
        .map(|value| BandEnergy {
            omega1,
            omega2,
            value,
            quad_error_estimate: err,
        })
        .collect())
}

/// `int |H_i|^2 S(W) dW` over `[0, pi]`.
pub fn weighted_band_energy(
    net: &Network,
    s: NodeId,
    i: NodeId,
    spectrum: &Spectrum,
    tol: f64,
) -> Result<f64> {
    net.check_node(i)?;
    Ok(weighted_band_energy_all(net, s, spectrum, tol)?[i.index()])
}

pub fn weighted_band_energy_all(
    net: &Network,
    s: NodeId,
    spectrum: &Spectrum,
    tol: f64,
) -> Result<Vec<f64>> {
    net.check_node(s)?;
    let active: Vec<_> = spectrum.pieces().filter(|&(_, _, l)| l > 0.0).collect();
    let mut total = vec![0.0; net.n()];
    for &(a, b, level) in &active {
        let piece_tol = tol / (active.len() as f64 * level);
        for (t, e) in total
            .iter_mut()
            .zip(band_energy_all(net, s, a, b, piece_tol)?)
        {
            *t += level * e.value;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let (v, _) = adaptive_simpson(|x| Ok(x * x * x - 2.0 * x), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let (v, _) = adaptive_simpson(|x| Ok(x.sin()), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn delay_band() {
        let net = Network::from_rows(vec![vec![0.0]]).unwrap();
        let s = NodeId::new(0);
        let e = band_energy(&net, s, s, 0.0, PI / 2.0, DEFAULT_QUAD_TOL).unwrap();
        assert!((e.value - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_band_matches_closed_form() {
        // int_0^pi dW / (1.25 - cos W) = pi / sqrt(1.25^2 - 1)
        let net = Network::from_rows(vec![vec![0.5]]).unwrap();
        let s = NodeId::new(0);
        let e = band_energy(&net, s, s, 0.0, PI, DEFAULT_QUAD_TOL).unwrap();
        assert!((e.value - PI / 0.75).abs() < 1e-8, "{}", e.value);
        assert!(e.quad_error_estimate <= DEFAULT_QUAD_TOL);
    }

    #[test]
    fn flat_spectrum_reduces_to_band() {
        let net = Network::nine_node_example();
        let s = NodeId::new(0);
        let band = band_energy_all(&net, s, 0.1, 0.5, 1e-10).unwrap();
        let spec = Spectrum::flat(0.1, 0.5, 1.0).unwrap();
        let w = weighted_band_energy_all(&net, s, &spec, 1e-10).unwrap();
        for (b, w) in band.iter().zip(&w) {
            assert_eq!(b.value, *w);
        }
        let zero = weighted_band_energy_all(&net, s, &Spectrum::zero(), 1e-10).unwrap();
        assert!(zero.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn band_inclusion_is_monotone() {
        let net = Network::nine_node_example();
        let s = NodeId::new(0);
        let i = NodeId::new(8);
        let inner = band_energy(&net, s, i, 0.5, 1.0, 1e-10).unwrap().value;
        let outer = band_energy(&net, s, i, 0.2, 2.0, 1e-10).unwrap().value;
        assert!(inner >= 0.0 && inner <= outer);
    }

    #[test]
    fn bad_bands_and_spectra() {
        let net = Network::from_rows(vec![vec![0.5]]).unwrap();
        let s = NodeId::new(0);
        assert!(band_energy(&net, s, s, 1.0, 0.5, 1e-8).is_err());
        assert!(band_energy(&net, s, s, 0.0, 4.0, 1e-8).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn stochastic_band_from_dc_is_singular() {
        let net = Network::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = NodeId::new(0);
        assert!(matches!(
            band_energy(&net, s, s, 0.0, 1.0, 1e-8),
            Err(Error::SingularAtOmega { .. })
        ));
    }
}
