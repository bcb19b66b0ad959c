//! Noiseless rate theory for the refractory channel.
//!
//! All logarithms are base 2; rates are in bits per flash.

use serde::{Deserialize, Serialize};

use crate::channel::{fsm_step, ChannelSpec, ChannelState, Noise};
use crate::linalg;
use crate::source::MarkovSource;
use crate::{Error, Result};

/// Largest block length accepted by [`brute_force_mi`].
pub const BRUTE_FORCE_MAX_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    ClosedForm,
    PerronRoot,
    BruteForce,
    Simulation,
    Gbaa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub argmax_a: Option<f64>,
    pub method: RateMethod,
}

/// `H_b(p)` in bits, with `H_b(0) = H_b(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// The unique `a` in `[0, 1]` with `a = (1 - a)^(L + 1)`.
///
/// `a - (1 - a)^(L+1)` is strictly increasing from -1 to 1, so bisection
/// always brackets the root.
pub fn fixed_point_a(refractory_len: usize) -> f64 {
    let exponent = refractory_len as i32 + 1;
    let residual = |a: f64| a - (1.0 - a).powi(exponent);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r == 0.0 || mid == lo || mid == hi {
            return mid;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `H_b(a) / (1 + L a)`: the entropy rate of the constrained source with
/// parameter `a`.
pub fn constrained_rate(refractory_len: usize, a: f64) -> f64 {
    binary_entropy(a) / (1.0 + refractory_len as f64 * a)
}

/// Maximum noiseless information rate, which also upper-bounds every noisy
/// rate on the same channel.
pub fn noiseless_rate(refractory_len: usize) -> RateResult {
    let a = fixed_point_a(refractory_len);
    RateResult {
        rate: constrained_rate(refractory_len, a),
        argmax_a: Some(a),
        method: RateMethod::ClosedForm,
    }
}

/// Adjacency matrix of the `(L, inf)` constraint graph. Node `i < L` counts
/// zeros since the last 1; node `L` is free to emit a 1.
pub fn rll_adjacency(refractory_len: usize) -> Vec<Vec<f64>> {
    let n = refractory_len + 1;
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate().take(refractory_len) {
        row[i + 1] = 1.0;
    }
    a[refractory_len][refractory_len] += 1.0;
    a[refractory_len][0] += 1.0;
    a
}

/// Capacity of the `(L, inf)` run-length constraint: log2 of the spectral
/// radius of [`rll_adjacency`].
pub fn rll_capacity_perron(refractory_len: usize) -> Result<RateResult> {
    let (lambda, _) = linalg::perron_pair(&rll_adjacency(refractory_len), 1e-13, 1_000_000)?;
    Ok(RateResult {
        rate: lambda.log2(),
        argmax_a: None,
        method: RateMethod::PerronRoot,
    })
}

/// Rate-optimal source for the noiseless channel: the constrained source of
/// order `L` with `a = a*(L)`.
pub fn maxentropic_source(refractory_len: usize) -> Result<MarkovSource> {
    if refractory_len == 0 {
        return Err(Error::InvalidParameter(
            "maxentropic source needs L >= 1 (use a Bernoulli(0.5) source for L = 0)".into(),
        ));
    }
    MarkovSource::constrained(refractory_len, fixed_point_a(refractory_len))
}

/// The same source built from the Perron eigendata of the constraint graph
/// written on `L`-bit histories: `P_ij = A_ij v_j / (lambda v_i)`.
pub fn maxentropic_source_perron(refractory_len: usize) -> Result<MarkovSource> {
    if refractory_len == 0 {
        return Err(Error::InvalidParameter("maxentropic source needs L >= 1".into()));
    }
    let n = 1usize << refractory_len;
    let mask = n - 1;
    let mut adj = vec![vec![0.0; n]; n];
    for (h, row) in adj.iter_mut().enumerate() {
        row[(h << 1) & mask] = 1.0;
        if h == 0 {
            row[1] = 1.0;
        }
    }
    let (lambda, v) = linalg::perron_pair(&adj, 1e-15, 1_000_000)?;
    let p_one = (0..n)
        .map(|h| adj[h][((h << 1) | 1) & mask] * v[((h << 1) | 1) & mask] / (lambda * v[h]))
        .collect();
    MarkovSource::new(refractory_len, p_one)
}

/// Entropy rate `sum_h pi(h) H_b(P(1 | h))` in bits.
pub fn entropy_rate(source: &MarkovSource) -> Result<f64> {
    let pi = source.stationary()?;
    Ok(pi
        .iter()
        .zip(source.probabilities())
        .map(|(w, &p)| w * binary_entropy(p))
        .sum())
}

/// Packed source history consistent with channel state `s0`.
pub(crate) fn start_history(s0: ChannelState) -> usize {
    s0.history()
}

/// Distribution of `Z_1^n` (indexed by the packed sequence, first symbol in
/// the highest bit) together with `H(X_1^n | S_0) / n`.
fn enumerate_outputs(
    source: &MarkovSource,
    refractory_len: usize,
    n: usize,
    s0: ChannelState,
) -> Result<(Vec<f64>, f64)> {
    s0.validate(refractory_len)?;
    let mut pz = vec![0.0; 1 << n];
    let mut input_entropy = 0.0;
    // (depth, source history, channel state, probability, packed z)
    let mut stack = vec![(0usize, start_history(s0), s0, 1.0f64, 0usize)];
    while let Some((depth, hist, state, prob, z)) = stack.pop() {
        if depth == n {
            pz[z] += prob;
            if prob > 0.0 {
                input_entropy -= prob * prob.log2();
            }
            continue;
        }
        for x in [0u8, 1] {
            let p = prob * source.transition_prob(hist, x);
            if p == 0.0 {
                continue;
            }
            let (next, out) = fsm_step(state, x, refractory_len)?;
            stack.push((depth + 1, source.next_history(hist, x), next, p, (z << 1) | usize::from(out)));
        }
    }
    Ok((pz, input_entropy / n as f64))
}

fn check_enumerable(n: usize) -> Result<()> {
    if n == 0 || n > BRUTE_FORCE_MAX_LEN {
        return Err(Error::NotEnumerable(format!(
            "block length {n} outside 1..={BRUTE_FORCE_MAX_LEN}"
        )));
    }
    Ok(())
}

/// Exact `I(X_1^n; Y_1^n | S_0 = s0) / n` by enumeration of every input and
/// output sequence. The source starts from the history implied by `s0`.
pub fn brute_force_mi(
    source: &MarkovSource,
    channel: &ChannelSpec,
    n: usize,
    s0: ChannelState,
) -> Result<f64> {
    check_enumerable(n)?;
    channel.noise.validate()?;
    let eps = match channel.noise {
        Noise::Noiseless => 0.0,
        Noise::BinarySymmetric { crossover } => crossover,
        Noise::Awgn { .. } => {
            return Err(Error::NotEnumerable("AWGN output is continuous".into()));
        }
    };
    let (pz, _) = enumerate_outputs(source, channel.refractory_len, n, s0)?;
    if eps == 0.0 {
        let h_z: f64 = pz.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
        return Ok((h_z / n as f64).max(0.0));
    }

    // p(y | z) depends only on the Hamming distance d(y, z).
    let by_distance: Vec<f64> = (0..=n)
        .map(|d| eps.powi(d as i32) * (1.0 - eps).powi((n - d) as i32))
        .collect();
    let support: Vec<(usize, f64)> = pz.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
    let mut h_y = 0.0;
    for y in 0..1usize << n {
        let py: f64 = support
            .iter()
            .map(|&(z, p)| p * by_distance[(y ^ z).count_ones() as usize])
            .sum();
        if py > 0.0 {
            h_y -= py * py.log2();
        }
    }
    let mut h_y_given_z = 0.0;
    let mut binom = 1.0;
    for (d, &p) in by_distance.iter().enumerate() {
        if p > 0.0 {
            h_y_given_z -= binom * p * p.log2();
        }
        binom = binom * (n - d) as f64 / (d + 1) as f64;
    }
    Ok(((h_y - h_y_given_z) / n as f64).max(0.0))
}

/// Exact `H(X_1^n | S_0 = s0) / n` of the source started from `s0`.
pub fn input_entropy(source: &MarkovSource, n: usize, s0: ChannelState, refractory_len: usize) -> Result<f64> {
    check_enumerable(n)?;
    enumerate_outputs(source, refractory_len, n, s0).map(|(_, h)| h)
}
