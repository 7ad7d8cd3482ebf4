//! Zero-state simulation, cutset-reduced simulation and the stacking matrix
//! `Q` that maps cutset trajectories to target-partition trajectories.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutset::SeparationCertificate;
use crate::error::{Error, Result};
use crate::network::{classify, is_ergodic, spectral_radius, Network, NodeId};

pub const DEFAULT_BANDLIMITED_LENGTH: usize = 8192;
pub const SETTLE_FACTOR: f64 = 30.0;
pub const SETTLE_CAP: usize = 100_000;
const FIT_PERIODS: f64 = 4.0;
const FIT_MIN_SAMPLES: usize = 16;
const FIT_REL_TOL: f64 = 1e-6;

/// A scalar the recursion can run over.
pub trait Sample:
    Copy + Default + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;

    /// One step of Neumaier compensated summation.
    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self);

    fn csv_header(name: &str) -> String;

    fn csv_fields(self, out: &mut String);
}

fn neumaier(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *carry += (*sum - t) + x;
    } else {
        *carry += (x - t) + *sum;
    }
    *sum = t;
}

impl Sample for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }

    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self) {
        neumaier(sum, carry, x);
    }

    fn csv_header(name: &str) -> String {
        name.to_string()
    }

    fn csv_fields(self, out: &mut String) {
        let _ = write!(out, ",{self:e}");
    }
}

impl Sample for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }

    fn compensated_add(sum: &mut Self, carry: &mut Self, x: Self) {
        neumaier(&mut sum.re, &mut carry.re, x.re);
        neumaier(&mut sum.im, &mut carry.im, x.im);
    }

    fn csv_header(name: &str) -> String {
        format!("{name}_re,{name}_im")
    }

    fn csv_fields(self, out: &mut String) {
        let _ = write!(out, ",{:e},{:e}", self.re, self.im);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Impulse,
    Step,
    Sinusoid {
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    PeriodicSamples {
        period: usize,
        samples: Vec<f64>,
    },
    /// `sin(W t) / (pi t) * e^{j W0 t}` with `t = k - delay`, zero from
    /// `k = length` on.
    BandLimited {
        w: f64,
        #[serde(default)]
        w0: f64,
        #[serde(default = "default_bandlimited_length")]
        length: usize,
        #[serde(default)]
        delay: usize,
    },
    Custom {
        samples: Vec<f64>,
    },
}

fn default_bandlimited_length() -> usize {
    DEFAULT_BANDLIMITED_LENGTH
}

fn unit_amplitude() -> f64 {
    1.0
}

/// An input sequence `u(k)`, `k >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    #[serde(flatten)]
    pub kind: SignalKind,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

impl InputSignal {
    pub fn new(kind: SignalKind, amplitude: f64) -> Result<Self> {
        let sig = InputSignal { kind, amplitude };
        sig.validate()?;
        Ok(sig)
    }

    pub fn impulse() -> Self {
        InputSignal {
            kind: SignalKind::Impulse,
            amplitude: 1.0,
        }
    }

    pub fn step() -> Self {
        InputSignal {
            kind: SignalKind::Step,
            amplitude: 1.0,
        }
    }

    pub fn sinusoid(omega: f64, phase: f64) -> Self {
        InputSignal {
            kind: SignalKind::Sinusoid { omega, phase },
            amplitude: 1.0,
        }
    }

    pub fn custom(samples: Vec<f64>) -> Self {
        InputSignal {
            kind: SignalKind::Custom { samples },
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("signal amplitude must be finite"));
        }
        match &self.kind {
            SignalKind::PeriodicSamples { period, samples } => {
                if *period == 0 {
                    return Err(Error::invalid("periodic signal needs period >= 1"));
                }
                if samples.len() != *period {
                    return Err(Error::LengthMismatch {
                        expected: *period,
                        actual: samples.len(),
                    });
                }
            }
            SignalKind::BandLimited { w, w0, .. } => {
                if !(*w > 0.0 && *w <= PI) || !w0.is_finite() {
                    return Err(Error::invalid("band-limited signal needs 0 < W <= pi"));
                }
            }
            SignalKind::Sinusoid { omega, phase } if !omega.is_finite() || !phase.is_finite() => {
                return Err(Error::invalid("sinusoid parameters must be finite"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.kind, SignalKind::BandLimited { w0, .. } if w0 != 0.0)
    }

    pub fn value(&self, k: usize) -> Complex64 {
        let a = self.amplitude;
        let real = |v: f64| Complex64::new(a * v, 0.0);
        match &self.kind {
            SignalKind::Impulse => real(if k == 0 { 1.0 } else { 0.0 }),
            SignalKind::Step => real(1.0),
            SignalKind::Sinusoid { omega, phase } => real((omega * k as f64 + phase).cos()),
            SignalKind::PeriodicSamples { period, samples } => real(samples[k % period]),
            SignalKind::Custom { samples } => real(samples.get(k).copied().unwrap_or(0.0)),
            SignalKind::BandLimited {
                w,
                w0,
                length,
                delay,
            } => {
                if k >= *length {
                    return Complex64::new(0.0, 0.0);
                }
                let t = k as f64 - *delay as f64;
                let env = if t == 0.0 {
                    w / PI
                } else {
                    (w * t).sin() / (PI * t)
                };
                Complex64::from_polar(a * env, w0 * t)
            }
        }
    }

    /// The first `len` samples.
    pub fn samples(&self, len: usize) -> Vec<Complex64> {
        (0..len).map(|k| self.value(k)).collect()
    }

    /// The first `len` samples, or `ComplexInput` for complex signals.
    pub fn real_samples(&self, len: usize) -> Result<Vec<f64>> {
        if self.is_complex() {
            return Err(Error::ComplexInput);
        }
        Ok((0..len).map(|k| self.value(k).re).collect())
    }
}

/// Input samples recorded at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord<T> {
    pub node: NodeId,
    pub samples: Vec<T>,
}

/// States `X(0..=k_f)` of a zero-state simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace<T = f64> {
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<InputRecord<T>>,
}

impl<T: Sample> Trace<T> {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn state(&self, k: usize) -> &[T] {
        &self.states[k]
    }

    /// `x_i(0..=k_f)`.
    pub fn node(&self, i: NodeId) -> Vec<T> {
        self.states.iter().map(|x| x[i.index()]).collect()
    }

    /// Restriction to the given nodes, in their order.
    pub fn restrict(&self, nodes: &[NodeId]) -> Vec<Vec<T>> {
        self.states
            .iter()
            .map(|x| nodes.iter().map(|v| x[v.index()]).collect())
            .collect()
    }

    /// Columns `k, x_1, ..., x_n`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("k");
        for j in 1..=n {
            out.push(',');
            out.push_str(&T::csv_header(&format!("x_{j}")));
        }
        out.push('\n');
        for (k, x) in self.states.iter().enumerate() {
            let _ = write!(out, "{k}");
            for &v in x {
                v.csv_fields(&mut out);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `X(k+1) = A X(k) + sum_u e_u u(k)` from `X(0) = 0` for `k_f` steps.
/// Samples past the end of an input are zero.
pub fn simulate_samples<T: Sample>(
    net: &Network,
    inputs: &[(NodeId, Vec<T>)],
    k_f: usize,
) -> Result<Trace<T>> {
    if k_f == 0 {
        return Err(Error::invalid("horizon k_f must be at least 1"));
    }
    for (k, (u, _)) in inputs.iter().enumerate() {
        net.check_node(*u)?;
        if inputs[..k].iter().any(|(v, _)| v == u) {
            return Err(Error::DuplicateInput { node: *u });
        }
    }
    let n = net.n();
    let mut states = Vec::with_capacity(k_f + 1);
    let mut x = vec![T::default(); n];
    states.push(x.clone());
    for k in 0..k_f {
        let mut next = vec![T::default(); n];
        for (l, slot) in next.iter_mut().enumerate() {
            let mut sum = T::default();
            let mut carry = T::default();
            for &(j, a) in net.row_support(l) {
                T::compensated_add(&mut sum, &mut carry, x[j] * a);
            }
            for (u, samples) in inputs {
                if u.index() == l {
                    if let Some(&v) = samples.get(k) {
                        T::compensated_add(&mut sum, &mut carry, v);
                    }
                }
            }
            *slot = sum + carry;
        }
        x = next;
        states.push(x.clone());
    }
    let inputs = inputs
        .iter()
        .map(|(u, s)| InputRecord {
            node: *u,
            samples: (0..k_f)
                .map(|k| s.get(k).copied().unwrap_or_default())
                .collect(),
        })
        .collect();
    Ok(Trace { states, inputs })
}

/// Real-valued simulation. Complex inputs are rejected with `ComplexInput`.
pub fn simulate(
    net: &Network,
    inputs: &BTreeMap<NodeId, InputSignal>,
    k_f: usize,
) -> Result<Trace<f64>> {
    let samples = inputs
        .iter()
        .map(|(&u, sig)| {
            sig.validate()?;
            Ok((u, sig.real_samples(k_f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    simulate_samples(net, &samples, k_f)
}

pub fn simulate_complex(
    net: &Network,
    inputs: &BTreeMap<NodeId, InputSignal>,
    k_f: usize,
) -> Result<Trace<Complex64>> {
    let samples = inputs
        .iter()
        .map(|(&u, sig)| {
            sig.validate()?;
            Ok((u, sig.samples(k_f)))
        })
        .collect::<Result<Vec<_>>>()?;
    simulate_samples(net, &samples, k_f)
}

/// States of the target partition `Z`, in the certificate's order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTrace {
    pub nodes: Vec<NodeId>,
    pub states: Vec<Vec<f64>>,
}

fn severed(cert: &SeparationCertificate) -> Result<()> {
    if !cert.severed {
        return Err(Error::NotSevered {
            target: cert.target,
        });
    }
    Ok(())
}

/// `(A_z, B)` with `A_z = A[Z, Z]` and `B = A[Z, C]`.
pub fn partition_blocks(
    net: &Network,
    cert: &SeparationCertificate,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let z = &cert.target_partition;
    (net.submatrix(z, z), net.submatrix(z, cert.cutset.members()))
}

/// Runs `X_z(k+1) = A_z X_z(k) + B X_c(k)` from `X_z(0) = 0`, where
/// `cutset_trace[k]` is `X_c(k)` ordered as the cutset members.
pub fn reduced_simulate(
    net: &Network,
    cert: &SeparationCertificate,
    cutset_trace: &[Vec<f64>],
    k_f: usize,
) -> Result<PartitionTrace> {
    severed(cert)?;
    if cutset_trace.len() < k_f {
        return Err(Error::LengthMismatch {
            expected: k_f,
            actual: cutset_trace.len(),
        });
    }
    let c = cert.cutset.len();
    if let Some(bad) = cutset_trace[..k_f].iter().find(|x| x.len() != c) {
        return Err(Error::LengthMismatch {
            expected: c,
            actual: bad.len(),
        });
    }
    let (a_z, b) = partition_blocks(net, cert);
    let nz = a_z.nrows();
    let mut states = Vec::with_capacity(k_f + 1);
    let mut x = vec![0.0; nz];
    states.push(x.clone());
    for xc in &cutset_trace[..k_f] {
        let next: Vec<f64> = (0..nz)
            .map(|r| {
                let (mut sum, mut carry) = (0.0, 0.0);
                for j in 0..nz {
                    neumaier(&mut sum, &mut carry, a_z[(r, j)] * x[j]);
                }
                for j in 0..c {
                    neumaier(&mut sum, &mut carry, b[(r, j)] * xc[j]);
                }
                sum + carry
            })
            .collect();
        x = next;
        states.push(x.clone());
    }
    Ok(PartitionTrace {
        nodes: cert.target_partition.clone(),
        states,
    })
}

/// The stacking matrix of size `(k_f+1)|Z| x (k_f+1)|C|` with
/// `[X_z(0); ...; X_z(k_f)] = Q [X_c(k_f); ...; X_c(0)]`.
///
/// Block row `r`, block column `k_f - r + 1 + j` holds `A_z^j B` for
/// `j < r`; everything else is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    horizon: usize,
    z: usize,
    c: usize,
    matrix: DMatrix<f64>,
    row_sums: Vec<f64>,
}

impl QMatrix {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn max_row_sum(&self) -> f64 {
        self.row_sums.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Block `(r, c)` of size `|Z| x |C|`.
    pub fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.matrix
            .view((r * self.z, c * self.c), (self.z, self.c))
            .into_owned()
    }

    /// `[X_c(k_f); ...; X_c(0)]` from a time-ordered cutset trace.
    pub fn stack_cutset(&self, cutset_trace: &[Vec<f64>]) -> Result<DVector<f64>> {
        let h = self.horizon;
        if cutset_trace.len() < h + 1 {
            return Err(Error::LengthMismatch {
                expected: h + 1,
                actual: cutset_trace.len(),
            });
        }
        let mut v = DVector::zeros((h + 1) * self.c);
        for blk in 0..=h {
            let x = &cutset_trace[h - blk];
            if x.len() != self.c {
                return Err(Error::LengthMismatch {
                    expected: self.c,
                    actual: x.len(),
                });
            }
            for (j, &val) in x.iter().enumerate() {
                v[blk * self.c + j] = val;
            }
        }
        Ok(v)
    }

    /// `X_z(0..=k_f)` predicted from the cutset trace `X_c(0..=k_f)`.
    pub fn apply(&self, cutset_trace: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let y = &self.matrix * self.stack_cutset(cutset_trace)?;
        Ok((0..=self.horizon)
            .map(|r| y.rows(r * self.z, self.z).iter().copied().collect())
            .collect())
    }
}

pub fn build_q(net: &Network, cert: &SeparationCertificate, k_f: usize) -> Result<QMatrix> {
    severed(cert)?;
    if k_f == 0 {
        return Err(Error::invalid("horizon k_f must be at least 1"));
    }
    let (a_z, b) = partition_blocks(net, cert);
    let (nz, nc) = (a_z.nrows(), b.ncols());
    let mut powers = Vec::with_capacity(k_f);
    let mut p = b.clone();
    for _ in 0..k_f {
        powers.push(p.clone());
        p = &a_z * p;
    }
    let mut matrix = DMatrix::zeros((k_f + 1) * nz, (k_f + 1) * nc);
    for r in 1..=k_f {
        for (j, blk) in powers.iter().enumerate().take(r) {
            let col = k_f - r + 1 + j;
            matrix.view_mut((r * nz, col * nc), (nz, nc)).copy_from(blk);
        }
    }
    let row_sums = matrix.row_iter().map(|r| r.sum()).collect();
    Ok(QMatrix {
        horizon: k_f,
        z: nz,
        c: nc,
        matrix,
        row_sums,
    })
}

/// `F = [A_z B; 0 I]`.
pub fn f_matrix(net: &Network, cert: &SeparationCertificate) -> Result<DMatrix<f64>> {
    severed(cert)?;
    let (a_z, b) = partition_blocks(net, cert);
    let (nz, nc) = (a_z.nrows(), b.ncols());
    let mut f = DMatrix::zeros(nz + nc, nz + nc);
    f.view_mut((0, 0), (nz, nz)).copy_from(&a_z);
    f.view_mut((0, nz), (nz, nc)).copy_from(&b);
    f.view_mut((nz, nz), (nc, nc)).fill_with_identity();
    Ok(f)
}

/// `sum_{j<k} A_z^j B`.
pub fn cumulative_coupling(
    net: &Network,
    cert: &SeparationCertificate,
    k: usize,
) -> Result<DMatrix<f64>> {
    severed(cert)?;
    let (a_z, b) = partition_blocks(net, cert);
    let mut sum = DMatrix::zeros(b.nrows(), b.ncols());
    let mut p = b;
    for _ in 0..k {
        sum += &p;
        p = &a_z * p;
    }
    Ok(sum)
}

/// Result of fitting `a cos(Wk) + b sin(Wk) + c` to a settled response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase: f64,
    /// Constant part; nonzero for stochastic networks.
    pub offset: f64,
    pub residual: f64,
    pub k_settle: usize,
    pub samples: usize,
}

/// Largest eigenvalue modulus that governs the transient.
fn transient_rate(net: &Network, stochastic: bool) -> Result<f64> {
    if !stochastic {
        return spectral_radius(net);
    }
    let schur = Schur::try_new(net.matrix().clone(), 1e-14, 10_000);
    let Some(schur) = schur else {
        return Ok(1.0);
    };
    let eig = schur.complex_eigenvalues();
    let mut unit_removed = false;
    let mut rate = 0.0f64;
    for ev in eig.iter() {
        if !unit_removed && (ev - Complex64::new(1.0, 0.0)).norm() < 1e-8 {
            unit_removed = true;
            continue;
        }
        rate = rate.max(ev.norm());
    }
    Ok(rate)
}

/// `ceil(30 / (1 - r))` capped at `10^5`, with `r` the transient rate.
pub fn default_settle(net: &Network) -> Result<usize> {
    let rate = transient_rate(net, classify(net).is_stochastic())?;
    if rate >= 1.0 {
        return Ok(SETTLE_CAP);
    }
    Ok(((SETTLE_FACTOR / (1.0 - rate)).ceil() as usize).min(SETTLE_CAP))
}

/// Amplitude and phase of the settled response at `i` to `cos(W k)` at `s`.
pub fn steady_state_sinusoid(
    net: &Network,
    s: NodeId,
    i: NodeId,
    omega: f64,
    k_settle: Option<usize>,
) -> Result<SinusoidFit> {
    net.check_node(s)?;
    net.check_node(i)?;
    if !(0.0..=PI).contains(&omega) {
        return Err(Error::invalid(format!(
            "frequency must lie in [0, pi], got {omega}"
        )));
    }
    let stochastic = classify(net).is_stochastic();
    if stochastic {
        if omega == 0.0 {
            return Err(Error::SingularAtOmega { omega });
        }
        if !is_ergodic(net)? {
            return Err(Error::invalid("stochastic network must be ergodic"));
        }
    } else {
        let rho = spectral_radius(net)?;
        if rho >= 1.0 - 1e-12 {
            return Err(Error::UnstableSystem {
                spectral_radius: rho,
            });
        }
    }
    let k_settle = match k_settle {
        Some(k) => k,
        None => default_settle(net)?,
    };
    let window = if omega > 0.0 {
        ((FIT_PERIODS * 2.0 * PI / omega).ceil() as usize).clamp(FIT_MIN_SAMPLES, SETTLE_CAP)
    } else {
        FIT_MIN_SAMPLES
    };
    let end = k_settle + window;
    let mut inputs = BTreeMap::new();
    inputs.insert(s, InputSignal::sinusoid(omega, 0.0));
    let trace = simulate(net, &inputs, end)?;
    let y: Vec<f64> = trace.node(i)[k_settle..end].to_vec();

    let has_sin = omega > 0.0 && omega < PI;
    let has_cos = omega > 0.0;
    let mut columns: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    if has_cos {
        columns.push(Box::new(move |k| (omega * k).cos()));
    }
    if has_sin {
        columns.push(Box::new(move |k| (omega * k).sin()));
    }
    columns.push(Box::new(|_| 1.0));
    let design = DMatrix::from_fn(window, columns.len(), |r, c| {
        columns[c]((k_settle + r) as f64)
    });
    let rhs = DVector::from_vec(y);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::invalid(format!("sinusoid fit failed: {e}")))?;
    let residual = (&design * &coef - &rhs).amax();
    let (a, b, offset) = match (has_cos, has_sin) {
        (true, true) => (coef[0], coef[1], coef[2]),
        (true, false) => (coef[0], 0.0, coef[1]),
        _ => (coef[0], 0.0, 0.0),
    };
    let amplitude = a.hypot(b);
    let phase = (-b).atan2(a);
    let offset = if has_cos { offset } else { 0.0 };
    if residual > FIT_REL_TOL * amplitude {
        return Err(Error::Unsettled {
            residual,
            amplitude,
        });
    }
    Ok(SinusoidFit {
        amplitude,
        phase,
        offset,
        residual,
        k_settle,
        samples: window,
    })
}
