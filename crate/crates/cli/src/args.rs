use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use decrescence::metrics::{Horizon, PNorm};
use decrescence::network::DocumentFormat;

#[derive(Parser, Debug)]
#[command(name = "decrescence", version)]
#[command(
    about = "Transfer metrics, separating cutsets and decrescence checks for diffusive networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a network and report its class, connectivity and spectral radius
    Validate {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Per-node l_p gains from the source, or maxima per distance class
    Gains(GainsArgs),
    /// Gains over a range of horizons
    Sweep(SweepArgs),
    /// Minimal separating cutsets between a source and a target
    Cutsets(CutsetsArgs),
    /// Frequency response samples or band energies
    Freq(FreqArgs),
    /// Impulse-response samples e_i^T A^k e_s
    Markov(MarkovArgs),
    /// Zero-state simulation with one driven node
    Simulate(SimulateArgs),
    /// Run the decrescence checks
    Verify(VerifyArgs),
    /// Sensor signal-to-noise ratios and ranking
    Snr(SnrArgs),
    /// Sampled check of strict propagation stability
    Propstab(PropstabArgs),
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("net").required(true).args(["network", "example"])))]
pub struct NetArgs {
    /// Network file (.csv matrix, .edges/.txt edge list, .json)
    #[arg(long)]
    pub network: Option<PathBuf>,

    /// Override the format guessed from the file extension
    #[arg(long, value_enum, requires = "network")]
    pub network_format: Option<NetFormat>,

    /// Use the built-in nine-node example network
    #[arg(long, alias = "paper-example")]
    pub example: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetFormat {
    Csv,
    Edges,
    Json,
}

impl From<NetFormat> for DocumentFormat {
    fn from(f: NetFormat) -> Self {
        match f {
            NetFormat::Csv => DocumentFormat::MatrixCsv,
            NetFormat::Edges => DocumentFormat::EdgeList,
            NetFormat::Json => DocumentFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Write to this file (atomically) instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_p(s: &str) -> Result<PNorm, String> {
    s.parse().map_err(|e: decrescence::Error| e.to_string())
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    s.parse().map_err(|e: decrescence::Error| e.to_string())
}

/// `A:B` with `A < B`.
pub fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("band '{s}' must look like A:B"))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad band start '{a}'"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad band end '{b}'"))?;
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonList(pub Vec<usize>);

/// A list `K1,K2,...` or a range `A:B` or `A:B:STEP`.
pub fn parse_horizons(s: &str) -> Result<HorizonList, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad horizon '{t}'"))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(format!("bad horizon range '{s}'")),
        };
        if step == 0 || a > b {
            return Err(format!("bad horizon range '{s}'"));
        }
        Ok(HorizonList((a..=b).step_by(step).collect()))
    } else {
        s.split(',')
            .map(num)
            .collect::<Result<_, _>>()
            .map(HorizonList)
    }
}

#[derive(Args, Debug)]
pub struct GainsArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1, conflicts_with = "inputs")]
    pub source: usize,

    /// Several input nodes driven by one shared signal
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<usize>,

    #[arg(long, value_parser = parse_p, default_value = "1", conflicts_with = "by_distance")]
    pub p: PNorm,

    /// Horizon k_f, or `inf`
    #[arg(long, value_parser = parse_horizon, default_value = "inf")]
    pub horizon: Horizon,

    /// Maxima of the l_1, l_2 and l_inf gains per distance class
    #[arg(long, conflicts_with = "inputs")]
    pub by_distance: bool,

    /// Also write a gnuplot script that plots the output file
    #[arg(long, requires = "output")]
    pub plot_script: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    #[arg(long, value_parser = parse_p, default_value = "2")]
    pub p: PNorm,

    /// `K1,K2,...` or `A:B[:STEP]`
    #[arg(long, value_parser = parse_horizons, default_value = "10,20,50,100,200")]
    pub horizons: HorizonList,

    /// Report maxima per distance class instead of per node
    #[arg(long)]
    pub by_distance: bool,

    /// Reference values per distance class; reports the closest horizon
    #[arg(long, value_delimiter = ',', requires = "by_distance")]
    pub reference: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct CutsetsArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    /// Source node(s)
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub source: Vec<usize>,

    #[arg(long)]
    pub target: usize,

    /// Stop after this many cutsets
    #[arg(long)]
    pub limit: Option<usize>,

    /// Only a minimum-cardinality cutset (max-flow)
    #[arg(long, conflicts_with = "check")]
    pub min: bool,

    /// Check a given cutset instead of enumerating
    #[arg(long, value_delimiter = ',')]
    pub check: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct FreqArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    /// Restrict to one target node
    #[arg(long)]
    pub target: Option<usize>,

    /// Frequencies in [-pi, pi]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub omega: Vec<f64>,

    /// Uniform grid of this many points on [0, pi]
    #[arg(long, conflicts_with = "omega")]
    pub grid: Option<usize>,

    /// Band energies int_A^B |H|^2 dW instead of point samples
    #[arg(long, value_parser = parse_band, conflicts_with_all = ["omega", "grid"])]
    pub band: Vec<(f64, f64)>,

    #[arg(long, default_value_t = decrescence::metrics::quadrature::DEFAULT_QUAD_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct MarkovArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    #[arg(long)]
    pub target: usize,

    /// Largest power k
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    /// `impulse`, `step`, `sin:OMEGA[:PHASE]`, or a JSON signal object
    #[arg(long, default_value = "impulse")]
    pub signal: String,

    #[arg(long, default_value_t = 50)]
    pub horizon: usize,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").required(true).args(["network", "example", "random", "self_test"])))]
pub struct VerifyArgs {
    #[arg(long)]
    pub network: Option<PathBuf>,

    #[arg(long, value_enum, requires = "network")]
    pub network_format: Option<NetFormat>,

    #[arg(long, alias = "paper-example")]
    pub example: bool,

    /// Randomly generated networks
    #[arg(long)]
    pub random: bool,

    /// Run the inverted inequalities; every check must report a violation
    #[arg(long)]
    pub self_test: bool,

    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    /// Every theorem (default)
    #[arg(long, conflicts_with = "theorem")]
    pub all_theorems: bool,

    /// Selected checks, e.g. T1_gain,T5_markov
    #[arg(long, value_delimiter = ',')]
    pub theorem: Vec<String>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 50, requires = "random")]
    pub count: usize,

    /// Stochastic (ergodic) random networks
    #[arg(long, requires = "random")]
    pub stochastic: bool,

    #[arg(long, default_value_t = decrescence::verify::DEFAULT_TOL)]
    pub tol: f64,

    /// Also write a JUnit XML report
    #[arg(long)]
    pub junit: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SnrModeArg {
    Transient,
    Persistent,
}

#[derive(Args, Debug)]
pub struct SnrArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, default_value_t = 1)]
    pub source: usize,

    #[arg(long, value_enum, default_value_t = SnrModeArg::Transient)]
    pub mode: SnrModeArg,

    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[arg(long, value_parser = parse_p, default_value = "2")]
    pub p: PNorm,

    /// Transient mode: input signal (see `simulate --signal`)
    #[arg(long, default_value = "impulse")]
    pub signal: String,

    #[arg(long, default_value_t = 200)]
    pub horizon: usize,

    /// Persistent mode: flat input spectrum on A:B
    #[arg(long, value_parser = parse_band, default_value = "0:3.141592653589793")]
    pub band: (f64, f64),

    /// Persistent mode: spectral level of the input
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,

    /// Candidate sensor nodes (default: every node)
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct PropstabArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub out: OutArgs,

    #[arg(long, value_parser = parse_p, default_value = "2")]
    pub p: PNorm,

    #[arg(long, value_parser = parse_p, default_value = "2")]
    pub t: PNorm,

    /// Number of sampled unit-norm inputs
    #[arg(long, default_value_t = 10)]
    pub count: usize,

    #[arg(long, default_value_t = 50)]
    pub horizon: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Restrict the sources (default: every node)
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<usize>,

    /// Only minimum-cardinality cutsets
    #[arg(long)]
    pub min_cut_only: bool,

    #[arg(long, default_value_t = decrescence::verify::DEFAULT_TOL)]
    pub tol: f64,
}
