//! Operator p-norms of entrywise-nonnegative linear maps.
//!
//! `p = 1` and `p = inf` have closed forms (max column / row sum, obtained as
//! `T^T 1` and `T 1` since `T >= 0`), `p = 2` is the largest singular value,
//! and any other `p` uses the nonlinear power method
//!
//! ```text
//! x <- dual_{p*}( T^T dual_p( T x ) ),   ||x||_p = 1
//! ```
//!
//! with `dual_q(z) = sign(z) |z|^(q-1)`. From a strictly positive start the
//! ratio `||T x||_p` increases monotonically, and for nonnegative `T` the
//! limit is the global maximum. The endpoint duals (`q = 1` gives the sign
//! pattern, `q = inf` the indicator of the largest entry) make the same loop
//! exact at `p = 1` and `p = inf`.

use nalgebra::DMatrix;
use serde::Serialize;

use super::PNorm;
use crate::error::{Error, Result};

/// A real linear map given by its action and the action of its transpose.
pub trait LinearMap {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;

    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        let mut e = vec![0.0; self.cols()];
        for j in 0..self.cols() {
            e[j] = 1.0;
            let col = self.apply(&e);
            for (k, v) in col.into_iter().enumerate() {
                m[(k, j)] = v;
            }
            e[j] = 0.0;
        }
        m
    }
}

impl LinearMap for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|k| (0..self.ncols()).map(|j| self[(k, j)] * x[j]).sum())
            .collect()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.ncols())
            .map(|j| (0..self.nrows()).map(|k| self[(k, j)] * y[k]).sum())
            .collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// The finite-horizon input-to-output map of a zero-state LTI response.
///
/// With one kernel `M` per input channel and horizon `h`, the map sends the
/// stacked inputs `u_b(0..h)` to `y(0..=h)` with
/// `y(k) = sum_b sum_{j<k} M_b(k-1-j) u_b(j)`, i.e. each channel is the
/// `(h+1) x h` lower-shifted Toeplitz block `T[k][j] = M(k-1-j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionOperator {
    kernels: Vec<Vec<f64>>,
    horizon: usize,
}

impl ConvolutionOperator {
    pub fn new(kernels: Vec<Vec<f64>>, horizon: usize) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::invalid("operator needs at least one input channel"));
        }
        let mut trimmed = Vec::with_capacity(kernels.len());
        for mut k in kernels {
            if k.len() < horizon {
                return Err(Error::LengthMismatch {
                    expected: horizon,
                    actual: k.len(),
                });
            }
            if k.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
                return Err(Error::invalid(
                    "kernel entries must be finite and nonnegative",
                ));
            }
            k.truncate(horizon);
            trimmed.push(k);
        }
        Ok(ConvolutionOperator {
            kernels: trimmed,
            horizon,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.kernels.len()
    }

    pub fn kernel(&self, channel: usize) -> &[f64] {
        &self.kernels[channel]
    }
}

impl LinearMap for ConvolutionOperator {
    fn rows(&self) -> usize {
        self.horizon + 1
    }

    fn cols(&self) -> usize {
        self.horizon * self.kernels.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let h = self.horizon;
        let mut y = vec![0.0; h + 1];
        for (b, m) in self.kernels.iter().enumerate() {
            let u = &x[b * h..(b + 1) * h];
            for (k, yk) in y.iter_mut().enumerate().skip(1) {
                let mut acc = 0.0;
                for j in (0..k).rev() {
                    acc += m[k - 1 - j] * u[j];
                }
                *yk += acc;
            }
        }
        y
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let h = self.horizon;
        let mut w = vec![0.0; h * self.kernels.len()];
        for (b, m) in self.kernels.iter().enumerate() {
            for j in 0..h {
                let mut acc = 0.0;
                for k in j + 1..=h {
                    acc += m[k - 1 - j] * y[k];
                }
                w[b * h + j] = acc;
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ClosedForm,
    SingularValue,
    NonnegPowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// Stopping rule for [`power_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Relative change of the norm estimate regarded as stationary.
    pub tol: f64,
    /// Consecutive stationary iterations required.
    pub patience: usize,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-13,
            patience: 5,
            max_iter: 200_000,
        }
    }
}

fn all_ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Largest column sum of a nonnegative map.
pub fn norm_one<T: LinearMap + ?Sized>(op: &T) -> f64 {
    op.apply_transpose(&all_ones(op.rows()))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Largest row sum of a nonnegative map.
pub fn norm_inf<T: LinearMap + ?Sized>(op: &T) -> f64 {
    op.apply(&all_ones(op.cols()))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Largest singular value (dense SVD).
pub fn norm_two<T: LinearMap + ?Sized>(op: &T) -> f64 {
    if op.rows() == 0 || op.cols() == 0 {
        return 0.0;
    }
    op.to_dense()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn dual_map(v: &[f64], q: PNorm) -> Vec<f64> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return vec![0.0; v.len()];
    }
    if q.is_infinite() {
        let mut out = vec![0.0; v.len()];
        let k = v.iter().enumerate().fold(
            0,
            |best, (k, x)| if x.abs() > v[best].abs() { k } else { best },
        );
        out[k] = v[k].signum();
        return out;
    }
    let e = q.value() - 1.0;
    v.iter()
        .map(|&x| {
            if x == 0.0 {
                0.0
            } else if e == 0.0 {
                x.signum()
            } else {
                x.signum() * (x.abs() / scale).powf(e)
            }
        })
        .collect()
}

/// Operator p-norm by the nonlinear power method (valid for any `p`, global
/// for nonnegative maps).
pub fn power_norm<T: LinearMap + ?Sized>(
    op: &T,
    p: PNorm,
    opts: PowerOptions,
) -> Result<NormEstimate> {
    let finish = |value, iterations, residual| NormEstimate {
        value,
        method: NormMethod::NonnegPowerIteration,
        iterations,
        residual,
    };
    if op.cols() == 0 || op.rows() == 0 {
        return Ok(finish(0.0, 0, 0.0));
    }
    let start = all_ones(op.cols());
    let norm0 = p.norm(start.iter().copied());
    let mut x: Vec<f64> = start.into_iter().map(|v| v / norm0).collect();
    let mut best = 0.0f64;
    let mut prev = f64::NAN;
    let mut stable = 0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y = op.apply(&x);
        let estimate = p.norm(y.iter().copied());
        best = best.max(estimate);
        if estimate == 0.0 {
            return Ok(finish(0.0, it, 0.0));
        }
        residual = ((estimate - prev) / estimate).abs();
        if residual <= opts.tol {
            stable += 1;
            if stable >= opts.patience {
                return Ok(finish(best, it, residual));
            }
        } else {
            stable = 0;
        }
        prev = estimate;
        let w = op.apply_transpose(&dual_map(&y, p));
        let next = dual_map(&w, p.conjugate());
        let nn = p.norm(next.iter().copied());
        if nn == 0.0 {
            return Ok(finish(best, it, residual));
        }
        x = next.into_iter().map(|v| v / nn).collect();
    }
    Err(Error::NoConvergence {
        what: "nonnegative p-norm power iteration",
        iterations: opts.max_iter,
        residual,
    })
}

/// Dispatches on `p`: closed forms at 1 and inf, SVD at 2, power method
/// otherwise.
pub fn operator_norm<T: LinearMap + ?Sized>(op: &T, p: PNorm) -> Result<NormEstimate> {
    let exact = |value, method| NormEstimate {
        value,
        method,
        iterations: 0,
        residual: 0.0,
    };
    if p.value() == 1.0 {
        Ok(exact(norm_one(op), NormMethod::ClosedForm))
    } else if p.is_infinite() {
        Ok(exact(norm_inf(op), NormMethod::ClosedForm))
    } else if p.value() == 2.0 {
        Ok(exact(norm_two(op), NormMethod::SingularValue))
    } else {
        power_norm(op, p, PowerOptions::default())
    }
}
