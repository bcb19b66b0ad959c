//! The refractory state machine, memoryless noise laws and the joint trellis.
//!
//! Binary histories are packed into integers with bit `k` holding the input
//! `k + 1` steps in the past (bit 0 is the most recent symbol). A history of
//! all zeros is equivalent to the ground state.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

/// State of the refractory machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[derive(Default)]
pub enum ChannelState {
    #[default]
    Ground,
    /// `Refractory(l)`: the last flash was `l` steps ago, `1 <= l <= L`.
    Refractory(usize),
}


impl ChannelState {
    pub fn validate(self, refractory_len: usize) -> Result<()> {
        match self {
            ChannelState::Ground => Ok(()),
            ChannelState::Refractory(l) if l >= 1 && l <= refractory_len => Ok(()),
            ChannelState::Refractory(l) => Err(Error::InvalidState {
                level: l,
                max: refractory_len,
            }),
        }
    }

    /// All `L + 1` states, ground first.
    pub fn all(refractory_len: usize) -> Vec<ChannelState> {
        std::iter::once(ChannelState::Ground)
            .chain((1..=refractory_len).map(ChannelState::Refractory))
            .collect()
    }

    /// The state reached after the packed input history `history`.
    pub fn from_history(history: usize, refractory_len: usize) -> ChannelState {
        let window = history & low_mask(refractory_len);
        if window == 0 {
            ChannelState::Ground
        } else {
            ChannelState::Refractory(window.trailing_zeros() as usize + 1)
        }
    }

    /// Shortest packed history that leaves the machine in this state.
    pub fn history(self) -> usize {
        match self {
            ChannelState::Ground => 0,
            ChannelState::Refractory(l) => 1 << (l - 1),
        }
    }
}

pub(crate) fn low_mask(bits: usize) -> usize {
    if bits >= usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << bits) - 1
    }
}

/// One transition of the refractory machine. Returns the next state and the
/// intermediate output `z` (1 iff a response is elicited).
pub fn fsm_step(state: ChannelState, x: u8, refractory_len: usize) -> Result<(ChannelState, u8)> {
    state.validate(refractory_len)?;
    check_bit(x)?;
    if refractory_len == 0 {
        return Ok((ChannelState::Ground, x));
    }
    let next = match (x, state) {
        (1, _) => ChannelState::Refractory(1),
        (_, ChannelState::Ground) => ChannelState::Ground,
        (_, ChannelState::Refractory(l)) if l == refractory_len => ChannelState::Ground,
        (_, ChannelState::Refractory(l)) => ChannelState::Refractory(l + 1),
    };
    let z = u8::from(x == 1 && state == ChannelState::Ground);
    Ok((next, z))
}

/// Runs the machine over `x` from `s0`. Returns `z` and the visited states
/// `S_1..S_n`.
pub fn fsm_run(x: &[u8], s0: ChannelState, refractory_len: usize) -> Result<(Vec<u8>, Vec<ChannelState>)> {
    s0.validate(refractory_len)?;
    let mut z = Vec::with_capacity(x.len());
    let mut states = Vec::with_capacity(x.len());
    let mut state = s0;
    for &bit in x {
        let (next, out) = fsm_step(state, bit, refractory_len)?;
        z.push(out);
        states.push(next);
        state = next;
    }
    Ok((z, states))
}

/// Intermediate output only; the hot path of codebook decoding.
pub fn responses(x: &[u8], s0: ChannelState, refractory_len: usize) -> Result<Vec<u8>> {
    fsm_run(x, s0, refractory_len).map(|(z, _)| z)
}

fn check_bit(x: u8) -> Result<()> {
    if x > 1 {
        return Err(Error::InvalidParameter(format!("input symbol {x} is not binary")));
    }
    Ok(())
}

/// Memoryless law of `Y` given the intermediate output `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Noise {
    Noiseless,
    BinarySymmetric { crossover: f64 },
    Awgn { variance: f64 },
}

impl Noise {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Noise::Noiseless => Ok(()),
            Noise::BinarySymmetric { crossover } if (0.0..=0.5).contains(&crossover) => Ok(()),
            Noise::Awgn { variance } if variance > 0.0 && variance.is_finite() => Ok(()),
            Noise::BinarySymmetric { crossover } => Err(Error::InvalidParameter(format!(
                "crossover {crossover} outside [0, 0.5]"
            ))),
            Noise::Awgn { variance } => Err(Error::InvalidParameter(format!(
                "noise variance {variance} must be positive"
            ))),
        }
    }

    /// True when the output alphabet is `{0, 1}`.
    pub fn is_binary(&self) -> bool {
        !matches!(self, Noise::Awgn { .. })
    }

    /// Natural-log likelihood (density for AWGN) of `y` given `z`;
    /// `-inf` when impossible.
    pub fn log_likelihood(&self, y: f64, z: u8) -> f64 {
        let z = f64::from(z);
        match *self {
            Noise::Noiseless => {
                if y == z {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Noise::BinarySymmetric { crossover } => {
                let p = if y == z { 1.0 - crossover } else { crossover };
                p.ln()
            }
            Noise::Awgn { variance } => {
                let d = y - z;
                -d * d / (2.0 * variance) - 0.5 * (2.0 * std::f64::consts::PI * variance).ln()
            }
        }
    }

    /// Per-symbol conditional entropy `h(Y | Z)` in bits (differential for AWGN).
    pub fn conditional_entropy_bits(&self) -> f64 {
        match *self {
            Noise::Noiseless => 0.0,
            Noise::BinarySymmetric { crossover } => crate::rate::binary_entropy(crossover),
            Noise::Awgn { variance } => {
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).log2()
            }
        }
    }

    fn sample(&self, z: u8, rng: &mut Rng, gauss: Option<&Normal<f64>>) -> f64 {
        match *self {
            Noise::Noiseless => f64::from(z),
            Noise::BinarySymmetric { crossover } => {
                let flip = crossover > 0.0 && rng.random::<f64>() < crossover;
                f64::from(z ^ u8::from(flip))
            }
            Noise::Awgn { .. } => f64::from(z) + gauss.expect("gaussian law").sample(rng),
        }
    }
}

impl std::fmt::Display for Noise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Noise::Noiseless => write!(f, "noiseless"),
            Noise::BinarySymmetric { crossover } => write!(f, "bsc({crossover})"),
            Noise::Awgn { variance } => write!(f, "awgn({variance})"),
        }
    }
}

/// Refractory length plus noise law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub refractory_len: usize,
    pub noise: Noise,
}

impl ChannelSpec {
    pub fn new(refractory_len: usize, noise: Noise) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            refractory_len,
            noise,
        })
    }

    pub fn noiseless(refractory_len: usize) -> Self {
        Self {
            refractory_len,
            noise: Noise::Noiseless,
        }
    }

    pub fn awgn(refractory_len: usize, variance: f64) -> Result<Self> {
        Self::new(refractory_len, Noise::Awgn { variance })
    }

    pub fn bsc(refractory_len: usize, crossover: f64) -> Result<Self> {
        Self::new(refractory_len, Noise::BinarySymmetric { crossover })
    }

    /// Noise variance if the channel is AWGN, else `0` (the column value
    /// used in tidy result tables).
    pub fn sigma2(&self) -> f64 {
        match self.noise {
            Noise::Awgn { variance } => variance,
            _ => 0.0,
        }
    }
}

/// Channel outputs `Y_1..Y_n`. Binary channels produce exact `0.0`/`1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations(pub Vec<f64>);

impl Observations {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Passes `z` through the memoryless noise law using `rng`.
pub fn apply_noise(z: &[u8], noise: &Noise, rng: &mut Rng) -> Result<Observations> {
    noise.validate()?;
    let gauss = match *noise {
        Noise::Awgn { variance } => Some(
            Normal::new(0.0, variance.sqrt())
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        ),
        _ => None,
    };
    Ok(Observations(
        z.iter().map(|&bit| noise.sample(bit, rng, gauss.as_ref())).collect(),
    ))
}

/// Deterministic joint trellis over the last `m = max(r, L)` inputs.
///
/// Node `s` is a packed history; the edge labelled `x` leads to
/// `((s << 1) | x) & mask` and emits `z = 1` iff `x = 1` and the low `L`
/// bits of `s` are all zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    source_order: usize,
    refractory_len: usize,
    memory: usize,
}

impl Trellis {
    pub fn new(source_order: usize, refractory_len: usize) -> Result<Self> {
        if source_order == 0 {
            return Err(Error::InvalidParameter("source order must be at least 1".into()));
        }
        let memory = source_order.max(refractory_len);
        if memory > 20 {
            return Err(Error::InvalidParameter(format!(
                "trellis memory {memory} too large (2^{memory} states)"
            )));
        }
        Ok(Self {
            source_order,
            refractory_len,
            memory,
        })
    }

    pub fn source_order(&self) -> usize {
        self.source_order
    }

    pub fn refractory_len(&self) -> usize {
        self.refractory_len
    }

    /// Number of remembered inputs `m`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    pub fn num_edges(&self) -> usize {
        2 * self.num_states()
    }

    #[inline]
    pub fn next(&self, state: usize, x: u8) -> usize {
        ((state << 1) | usize::from(x)) & low_mask(self.memory)
    }

    #[inline]
    pub fn output(&self, state: usize, x: u8) -> u8 {
        u8::from(x == 1 && state & low_mask(self.refractory_len) == 0)
    }

    /// Index of the source history (low `r` bits) for a trellis node.
    #[inline]
    pub fn source_history(&self, state: usize) -> usize {
        state & low_mask(self.source_order)
    }

    /// All edges as `(from, x, to, z)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, u8, usize, u8)> + '_ {
        (0..self.num_states()).flat_map(move |s| {
            [0u8, 1u8].into_iter().map(move |x| (s, x, self.next(s, x), self.output(s, x)))
        })
    }

    /// Walks the trellis from `start` and returns the output labels.
    pub fn walk(&self, start: usize, x: &[u8]) -> Vec<u8> {
        let mut state = start & low_mask(self.memory);
        x.iter()
            .map(|&bit| {
                let z = self.output(state, bit);
                state = self.next(state, bit);
                z
            })
            .collect()
    }

    /// Whether every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.num_states();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(s) = stack.pop() {
                let neighbours: Vec<usize> = if forward {
                    vec![self.next(s, 0), self.next(s, 1)]
                } else {
                    // predecessors: drop the newest bit, restore either oldest bit
                    let base = s >> 1;
                    if self.memory == 0 {
                        vec![0]
                    } else {
                        vec![base, base | (1 << (self.memory - 1))]
                    }
                };
                for t in neighbours {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
            seen.into_iter().all(|v| v)
        };
        reach(true) && reach(false)
    }
}

/// Builds the joint trellis for an order-`r` source on the `L`-state channel.
pub fn build_trellis(source_order: usize, refractory_len: usize) -> Result<Trellis> {
    Trellis::new(source_order, refractory_len)
}
