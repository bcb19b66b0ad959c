//! Monte Carlo spelling experiments.
//!
//! Each run draws a target character uniformly, sends its codeword through
//! the refractory machine and the noise law, and decodes with the MAP rule
//! (maximum likelihood under the uniform prior).

use std::ops::Range;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_noise, ChannelSpec, ChannelState, Noise, Observations};
use crate::codebook::{gen_cbp, gen_mbc, gen_min_dist, gen_rcp, Codebook, GridLayout};
use crate::gbaa::{gbaa_optimize, GbaaConfig};
use crate::rate::maxentropic_source;
use crate::rng;
use crate::source::MarkovSource;
use crate::{Error, Result};

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Runs handed to one rayon task.
const SHARD: usize = 256;

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Maximum-likelihood decoder over precomputed noiseless responses.
#[derive(Debug, Clone)]
pub struct Decoder {
    responses: Vec<Vec<u8>>,
    noise: Noise,
}

impl Decoder {
    pub fn new(codebook: &Codebook, channel: &ChannelSpec, s0: ChannelState) -> Result<Self> {
        channel.noise.validate()?;
        Ok(Self {
            responses: codebook.responses(channel.refractory_len, s0)?,
            noise: channel.noise,
        })
    }

    pub fn responses(&self) -> &[Vec<u8>] {
        &self.responses
    }

    /// Log-likelihood of `y` under character `w`, up to a constant shared by
    /// all characters.
    pub fn log_likelihood(&self, y: &[f64], w: usize) -> f64 {
        let z = &self.responses[w];
        match self.noise {
            Noise::Awgn { variance } => {
                -y.iter().zip(z).map(|(&v, &b)| (v - f64::from(b)).powi(2)).sum::<f64>() / (2.0 * variance)
            }
            Noise::Noiseless => {
                if y.iter().zip(z).all(|(&v, &b)| v == f64::from(b)) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Noise::BinarySymmetric { crossover } => {
                let disagree = y.iter().zip(z).filter(|(&v, &b)| v != f64::from(b)).count();
                let agree = z.len() - disagree;
                let term = |count: usize, p: f64| if count == 0 { 0.0 } else { count as f64 * p.ln() };
                term(agree, 1.0 - crossover) + term(disagree, crossover)
            }
        }
    }

    /// Index of the most likely character; ties go to the lowest index.
    pub fn decode(&self, y: &[f64]) -> Result<usize> {
        let n = self.responses[0].len();
        if y.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: y.len(),
            });
        }
        let mut best = 0;
        let mut best_ll = f64::NEG_INFINITY;
        for w in 0..self.responses.len() {
            let ll = self.log_likelihood(y, w);
            if ll > best_ll {
                best = w;
                best_ll = ll;
            }
        }
        Ok(best)
    }
}

/// MAP estimate of the target character from one observation sequence.
pub fn map_decode(y: &Observations, codebook: &Codebook, channel: &ChannelSpec, s0: ChannelState) -> Result<usize> {
    Decoder::new(codebook, channel, s0)?.decode(y.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub codebook: Codebook,
    pub channel: ChannelSpec,
    pub runs: usize,
    pub seed: u64,
    pub s0: ChannelState,
    /// Collect the `W x W` confusion matrix.
    pub confusion: bool,
}

impl SimConfig {
    pub fn new(codebook: Codebook, channel: ChannelSpec, seed: u64) -> Self {
        Self {
            codebook,
            channel,
            runs: 1000,
            seed,
            s0: ChannelState::Ground,
            confusion: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        self.channel.noise.validate()?;
        self.s0.validate(self.channel.refractory_len)
    }
}

/// Counts from a contiguous range of runs; merging is associative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub runs: u64,
    pub correct: u64,
    /// `confusion[target][decoded]`, empty when not collected.
    pub confusion: Vec<Vec<u64>>,
}

impl Tally {
    fn empty(num_chars: usize, confusion: bool) -> Self {
        Self {
            runs: 0,
            correct: 0,
            confusion: if confusion { vec![vec![0; num_chars]; num_chars] } else { Vec::new() },
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.runs += other.runs;
        self.correct += other.correct;
        if self.confusion.is_empty() {
            self.confusion = other.confusion;
        } else {
            for (a, b) in self.confusion.iter_mut().zip(other.confusion) {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
        }
        self
    }
}

/// Runs `runs` of the experiment. Run `i` uses random stream `i` of the seed,
/// so any partition of the run indices gives the same merged tally.
pub fn run_shard(cfg: &SimConfig, decoder: &Decoder, runs: Range<usize>) -> Result<Tally> {
    let w = cfg.codebook.num_chars();
    let mut tally = Tally::empty(w, cfg.confusion);
    for i in runs {
        let mut rng = rng::stream(cfg.seed, i as u64);
        let target = rng.random_range(0..w);
        let y = apply_noise(&decoder.responses()[target], &cfg.channel.noise, &mut rng)?;
        let guess = decoder.decode(y.as_slice())?;
        tally.runs += 1;
        tally.correct += u64::from(guess == target);
        if cfg.confusion {
            tally.confusion[target][guess] += 1;
        }
    }
    Ok(tally)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub accuracy: f64,
    pub wilson_ci95: (f64, f64),
    pub correct: u64,
    pub runs: u64,
    pub codebook: String,
    pub num_chars: usize,
    pub len: usize,
    pub codebook_seed: u64,
    pub channel: ChannelSpec,
    pub s0: ChannelState,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<u64>>>,
}

pub fn run_experiment(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let decoder = Decoder::new(&cfg.codebook, &cfg.channel, cfg.s0)?;
    let shards: Vec<Range<usize>> = (0..cfg.runs)
        .step_by(SHARD)
        .map(|start| start..(start + SHARD).min(cfg.runs))
        .collect();
    let tallies = shards
        .into_par_iter()
        .map(|r| run_shard(cfg, &decoder, r))
        .collect::<Result<Vec<_>>>()?;
    let tally = tallies
        .into_iter()
        .fold(Tally::empty(cfg.codebook.num_chars(), cfg.confusion), Tally::merge);
    Ok(report(cfg, tally))
}

fn report(cfg: &SimConfig, tally: Tally) -> SimReport {
    SimReport {
        accuracy: tally.correct as f64 / tally.runs as f64,
        wilson_ci95: wilson_interval(tally.correct, tally.runs),
        correct: tally.correct,
        runs: tally.runs,
        codebook: cfg.codebook.kind.label(),
        num_chars: cfg.codebook.num_chars(),
        len: cfg.codebook.len(),
        codebook_seed: cfg.codebook.seed,
        channel: cfg.channel,
        s0: cfg.s0,
        seed: cfg.seed,
        confusion: cfg.confusion.then_some(tally.confusion),
    }
}

/// Codebook family evaluated at each sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BookSpec {
    /// Memory-based codebook regenerated for the point's `L`.
    Mbc,
    Rcp,
    Cbp { min_gap: usize },
    MinDist { weight: usize, trials: usize },
}

impl BookSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BookSpec::Mbc => "mbc",
            BookSpec::Rcp => "rcp",
            BookSpec::Cbp { .. } => "cbp",
            BookSpec::MinDist { .. } => "mindist",
        }
    }
}

/// Where MBC rows come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MbcSource {
    /// Noiseless optimum, independent of the noise level.
    Maxentropic,
    /// Source optimized by GBAA for each `(sigma^2, L)` point.
    Gbaa { sample_len: usize, max_iters: usize },
}

/// The rate-optimal source used for MBC(L) on the given channel.
pub fn mbc_source(mode: MbcSource, channel: &ChannelSpec, seed: u64) -> Result<MarkovSource> {
    let l = channel.refractory_len;
    match mode {
        MbcSource::Maxentropic if l == 0 => MarkovSource::bernoulli(1, 0.5),
        MbcSource::Maxentropic => maxentropic_source(l),
        MbcSource::Gbaa { sample_len, max_iters } => {
            let cfg = GbaaConfig {
                sample_len,
                max_iters,
                ..GbaaConfig::new(l.max(1), seed)
            };
            Ok(gbaa_optimize(channel, &cfg)?.source)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// AWGN noise variances.
    pub sigma2: Vec<f64>,
    pub refractory: Vec<usize>,
    pub books: Vec<BookSpec>,
    pub len: usize,
    pub runs: usize,
    pub seed: u64,
    pub mbc: MbcSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma2: f64,
    pub refractory_len: usize,
    pub codebook: String,
    pub len: usize,
    pub runs: u64,
    pub accuracy: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Points that failed, with a description of the point.
    pub failures: Vec<(String, Error)>,
}

pub const SWEEP_CSV_HEADER: &str = "sigma2,L,codebook,N,runs,accuracy,ci_lo,ci_hi,seed";

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.sigma2, r.refractory_len, r.codebook, r.len, r.runs, r.accuracy, r.ci_lo, r.ci_hi, r.seed
            ));
        }
        out
    }
}

/// Codebook for one sweep point. Baselines depend only on `(book, L)`;
/// GBAA-based MBC also depends on the noise level.
pub fn sweep_codebook(spec: &SweepSpec, book_idx: usize, channel: &ChannelSpec) -> Result<Codebook> {
    let l = channel.refractory_len;
    let seed = rng::derive_seed(spec.seed, ((book_idx as u64) << 32) | l as u64);
    let grid = GridLayout::default();
    match spec.books[book_idx] {
        BookSpec::Mbc => {
            let source = mbc_source(spec.mbc, channel, rng::derive_seed(seed, 1))?;
            gen_mbc(&source, grid.size(), spec.len, seed)
        }
        BookSpec::Rcp => gen_rcp(grid, spec.len, seed),
        BookSpec::Cbp { min_gap } => gen_cbp(spec.len, min_gap, seed),
        BookSpec::MinDist { weight, trials } => gen_min_dist(grid.size(), spec.len, weight, trials, seed),
    }
}

/// Evaluates every `(L, sigma^2, book)` point. Rows come out ordered by
/// `L`, then `sigma^2`, then book, regardless of execution order.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.sigma2.is_empty() || spec.refractory.is_empty() || spec.books.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if spec.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let mut points = Vec::new();
    for &l in &spec.refractory {
        for &s2 in &spec.sigma2 {
            for b in 0..spec.books.len() {
                points.push((l, s2, b));
            }
        }
    }
    let results: Vec<Result<SweepRow>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(l, s2, b))| {
            let channel = ChannelSpec::awgn(l, s2)?;
            let book = sweep_codebook(spec, b, &channel)?;
            let cfg = SimConfig {
                runs: spec.runs,
                ..SimConfig::new(book, channel, rng::derive_seed(spec.seed, idx as u64))
            };
            let rep = run_experiment(&cfg)?;
            Ok(SweepRow {
                sigma2: s2,
                refractory_len: l,
                codebook: rep.codebook,
                len: rep.len,
                runs: rep.runs,
                accuracy: rep.accuracy,
                ci_lo: rep.wilson_ci95.0,
                ci_hi: rep.wilson_ci95.1,
                seed: cfg.seed,
            })
        })
        .collect();
    let mut table = SweepTable {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for ((l, s2, b), res) in points.into_iter().zip(results) {
        match res {
            Ok(row) => table.rows.push(row),
            Err(e) => table
                .failures
                .push((format!("L={l} sigma2={s2} book={}", spec.books[b].name()), e)),
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::CodebookKind;

    fn book(rows: Vec<Vec<u8>>) -> Codebook {
        Codebook::new(rows, CodebookKind::Imported { label: "t".into() }, 0).unwrap()
    }

    #[test]
    fn decode_awgn_example() {
        let b = book(vec![vec![1, 0], vec![0, 1]]);
        let c = ChannelSpec::awgn(1, 0.5).unwrap();
        let y = Observations(vec![0.9, -0.1]);
        // squared distances 0.02 vs 2.02: the first character wins
        assert_eq!(map_decode(&y, &b, &c, ChannelState::Ground).unwrap(), 0);
    }

    #[test]
    fn decode_ties_to_lowest_index() {
        let b = book(vec![vec![0, 1], vec![1, 0], vec![1, 0]]);
        let c = ChannelSpec::awgn(1, 1.0).unwrap();
        for y in [vec![1.0, 0.0], vec![0.2, 0.3]] {
            let got = map_decode(&Observations(y), &b, &c, ChannelState::Ground).unwrap();
            assert_ne!(got, 2);
        }
        let useless = ChannelSpec::bsc(0, 0.5).unwrap();
        assert_eq!(map_decode(&Observations(vec![1.0, 0.0]), &b, &useless, ChannelState::Ground).unwrap(), 0);
    }

    #[test]
    fn decode_noiseless_exact() {
        let b = book(vec![vec![1, 0, 0, 1], vec![0, 1, 0, 0], vec![0, 0, 1, 0]]);
        let c = ChannelSpec::noiseless(1);
        for w in 0..3 {
            let z = b.responses(1, ChannelState::Ground).unwrap()[w].iter().map(|&v| f64::from(v)).collect();
            assert_eq!(map_decode(&Observations(z), &b, &c, ChannelState::Ground).unwrap(), w);
        }
        assert!(matches!(
            map_decode(&Observations(vec![0.0]), &b, &c, ChannelState::Ground),
            Err(Error::LengthMismatch { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - lo - 0.19).abs() < 0.01);
        assert!(wilson_interval(10, 10).1 > 1.0 - 1e-12);
        assert!(wilson_interval(0, 10).0 == 0.0);
    }

    #[test]
    fn sharding_does_not_change_results() {
        let b = gen_rcp(GridLayout::default(), 24, 3).unwrap();
        let cfg = SimConfig {
            runs: 500,
            confusion: true,
            ..SimConfig::new(b, ChannelSpec::awgn(1, 0.8).unwrap(), 11)
        };
        let dec = Decoder::new(&cfg.codebook, &cfg.channel, cfg.s0).unwrap();
        let whole = run_shard(&cfg, &dec, 0..500).unwrap();
        let parts = run_shard(&cfg, &dec, 0..123)
            .unwrap()
            .merge(run_shard(&cfg, &dec, 123..400).unwrap())
            .merge(run_shard(&cfg, &dec, 400..500).unwrap());
        assert_eq!(whole, parts);
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.correct, whole.correct);
        let conf = rep.confusion.unwrap();
        assert_eq!(conf.iter().flatten().sum::<u64>(), 500);
        let diag: u64 = (0..36).map(|i| conf[i][i]).sum();
        assert_eq!(diag, rep.correct);
    }

    #[test]
    fn refractory_pair_is_confused() {
        let mut rows = vec![vec![0u8; 8]; 4];
        rows[0] = vec![1, 1, 0, 0, 0, 0, 0, 0];
        rows[1] = vec![1, 0, 0, 0, 0, 0, 0, 0];
        rows[2] = vec![0, 0, 0, 1, 0, 1, 0, 0];
        rows[3] = vec![0, 0, 0, 0, 0, 0, 1, 0];
        let cfg = SimConfig {
            runs: 2000,
            confusion: true,
            ..SimConfig::new(book(rows), ChannelSpec::awgn(1, 1e-4).unwrap(), 2)
        };
        let rep = run_experiment(&cfg).unwrap();
        let conf = rep.confusion.unwrap();
        // identical responses: both decode to the lower index
        assert_eq!(conf[1][1], 0);
        assert_eq!(conf[0][1] + conf[1][1], 0);
        assert!(conf[1][0] > 0);
        assert_eq!(conf[2][2] + conf[3][3], conf[2].iter().sum::<u64>() + conf[3].iter().sum::<u64>());
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let spec = SweepSpec {
            sigma2: vec![],
            refractory: vec![1],
            books: vec![BookSpec::Rcp],
            len: 60,
            runs: 10,
            seed: 0,
            mbc: MbcSource::Maxentropic,
        };
        assert!(sweep(&spec).is_err());
    }

    #[test]
    fn sweep_reports_failed_points_and_continues() {
        let spec = SweepSpec {
            sigma2: vec![1.0, -1.0],
            refractory: vec![1],
            books: vec![BookSpec::Rcp],
            len: 24,
            runs: 50,
            seed: 3,
            mbc: MbcSource::Maxentropic,
        };
        let t = sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.failures.len(), 1);
        assert!(t.to_csv().starts_with(SWEEP_CSV_HEADER));
    }
}
