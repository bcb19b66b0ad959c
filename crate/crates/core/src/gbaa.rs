//! Information rates on the noisy channel.
//!
//! [`estimate_rate`] evaluates the mutual information rate of a Markov source
//! by simulating one long realization and running the scaled forward
//! recursion on the joint trellis. [`gbaa_optimize`] runs the generalized
//! Blahut-Arimoto iteration: simulate, compute expected edge metrics with a
//! forward-backward pass, then re-solve the maxentropic problem on the
//! weighted graph.

use serde::{Deserialize, Serialize};

use crate::channel::{apply_noise, ChannelSpec, Noise, Trellis};
use crate::linalg;
use crate::rng::{self, Rng};
use crate::source::MarkovSource;
use crate::{Error, Result};

/// Transition probabilities are kept inside this margin during optimization
/// so that every trellis edge stays live.
const PROB_FLOOR: f64 = 1e-12;
const BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Bits per channel use, clipped to `[0, 1]`.
    pub rate: f64,
    pub std_err: f64,
    pub sample_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbaaConfig {
    pub order: usize,
    /// Simulated sequence length per iteration.
    pub sample_len: usize,
    pub max_iters: usize,
    /// Stop once consecutive iterate rates differ by less than this.
    pub rate_tol: f64,
    pub seed: u64,
}

impl GbaaConfig {
    pub fn new(order: usize, seed: u64) -> Self {
        Self {
            order,
            sample_len: 100_000,
            max_iters: 60,
            rate_tol: 1e-4,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.sample_len < 2 || self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "GBAA needs order >= 1, sample_len >= 2 and max_iters >= 1".into(),
            ));
        }
        if !(self.rate_tol > 0.0) {
            return Err(Error::InvalidParameter("rate_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbaaOutcome {
    /// Best iterate, of the configured order.
    pub source: MarkovSource,
    pub rate: RateEstimate,
    /// Rate estimate of every iterate, in order.
    pub trace: Vec<RateEstimate>,
    /// Index into `trace` of the returned iterate.
    pub best_iter: usize,
}

/// Per-step likelihood factors for `z = 0` and `z = 1`, scaled so the larger
/// is 1, plus the natural-log scale that was removed.
fn likelihood_factors(noise: &Noise, y: f64) -> Result<([f64; 2], f64)> {
    let ll = [noise.log_likelihood(y, 0), noise.log_likelihood(y, 1)];
    let top = ll[0].max(ll[1]);
    if top == f64::NEG_INFINITY {
        return Err(Error::NonConvergence(format!("observation {y} has zero likelihood")));
    }
    Ok(([(ll[0] - top).exp(), (ll[1] - top).exp()], top))
}

/// Scaled forward recursion. Returns `ln p(y_t | y_1^{t-1})` for every `t`;
/// `on_step` sees each normalised filtering distribution.
fn forward(
    trellis: &Trellis,
    source: &MarkovSource,
    noise: &Noise,
    y: &[f64],
    initial: &[f64],
    mut on_step: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    let states = trellis.num_states();
    let mut alpha = initial.to_vec();
    let mut next = vec![0.0; states];
    let mut log_terms = Vec::with_capacity(y.len());
    for (t, &obs) in y.iter().enumerate() {
        let (factor, shift) = likelihood_factors(noise, obs)?;
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for x in [0u8, 1] {
                let p = source.transition_prob(s, x);
                if p > 0.0 {
                    next[trellis.next(s, x)] += a * p * factor[usize::from(trellis.output(s, x))];
                }
            }
        }
        let total: f64 = next.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NonConvergence(format!("forward recursion lost all mass at step {t}")));
        }
        next.iter_mut().for_each(|v| *v /= total);
        log_terms.push(total.ln() + shift);
        std::mem::swap(&mut alpha, &mut next);
        on_step(t, &alpha);
    }
    Ok(log_terms)
}

struct Realization {
    start: usize,
    y: Vec<f64>,
}

fn simulate(trellis: &Trellis, source: &MarkovSource, noise: &Noise, start: usize, n: usize, rng: &mut Rng) -> Result<Realization> {
    let x = source.sample_from(start, n, rng);
    let z = trellis.walk(start, &x);
    let y = apply_noise(&z, noise, rng)?.0;
    Ok(Realization { start, y })
}

fn batch_std_err(values: &[f64]) -> f64 {
    let batches = BATCHES.min(values.len());
    if batches < 2 {
        return 0.0;
    }
    let size = values.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

fn validate_source(source: &MarkovSource) -> Result<()> {
    // only the number of recurrent classes matters here
    source.stationary().map(|_| ())
}

/// Simulation estimate of the information rate of `source` on `channel`.
///
/// `(1/n) [-log p(y)]` comes from the forward recursion started at the
/// all-zero history; `h(Y | X)` is the closed-form per-symbol noise entropy.
pub fn estimate_rate(source: &MarkovSource, channel: &ChannelSpec, n: usize, seed: u64) -> Result<RateEstimate> {
    channel.noise.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample length must be positive".into()));
    }
    validate_source(source)?;
    let trellis = Trellis::new(source.order(), channel.refractory_len)?;
    let lifted = source.lift(trellis.memory())?;
    estimate_on_trellis(&trellis, &lifted, &channel.noise, n, &mut rng::stream(seed, 0))
}

fn estimate_on_trellis(trellis: &Trellis, source: &MarkovSource, noise: &Noise, n: usize, rng: &mut Rng) -> Result<RateEstimate> {
    let real = simulate(trellis, source, noise, 0, n, rng)?;
    let mut initial = vec![0.0; trellis.num_states()];
    initial[real.start] = 1.0;
    let log_terms = forward(trellis, source, noise, &real.y, &initial, |_, _| {})?;
    let per_step: Vec<f64> = log_terms.iter().map(|l| -l / std::f64::consts::LN_2).collect();
    let h_out = per_step.iter().sum::<f64>() / n as f64;
    let rate = h_out - noise.conditional_entropy_bits();
    Ok(RateEstimate {
        rate: rate.clamp(0.0, 1.0),
        std_err: batch_std_err(&per_step),
        sample_len: n,
    })
}

/// Expected edge metrics `T[s][x]` from one simulated realization:
/// the time-average of `sigma/(mu_s P) log2(sigma/rho)` with `sigma` the
/// edge posterior and `rho` the node posterior.
fn edge_metrics(
    trellis: &Trellis,
    source: &MarkovSource,
    mu: &[f64],
    noise: &Noise,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<[f64; 2]>> {
    let states = trellis.num_states();
    let start = MarkovSource::sample_history(mu, rng);
    let real = simulate(trellis, source, noise, start, n, rng)?;

    let factors: Vec<[f64; 2]> = real
        .y
        .iter()
        .map(|&obs| likelihood_factors(noise, obs).map(|(f, _)| f))
        .collect::<Result<_>>()?;

    // alphas[t] is the filtering distribution of S_t, alphas[0] = mu
    let mut alphas = Vec::with_capacity((n + 1) * states);
    alphas.extend_from_slice(mu);
    forward(trellis, source, noise, &real.y, mu, |_, a| alphas.extend_from_slice(a))?;

    let mut metrics = vec![[0.0f64; 2]; states];
    let mut beta = vec![1.0 / states as f64; states];
    let mut prev_beta = vec![0.0; states];
    let mut sigma = vec![[0.0f64; 2]; states];
    for t in (0..n).rev() {
        let alpha = &alphas[t * states..(t + 1) * states];
        let f = factors[t];
        let mut total = 0.0;
        for s in 0..states {
            for x in [0u8, 1] {
                let w = alpha[s]
                    * source.transition_prob(s, x)
                    * f[usize::from(trellis.output(s, x))]
                    * beta[trellis.next(s, x)];
                sigma[s][usize::from(x)] = w;
                total += w;
            }
        }
        if !(total > 0.0) {
            return Err(Error::NonConvergence(format!("edge posteriors vanished at step {t}")));
        }
        for s in 0..states {
            let rho = (sigma[s][0] + sigma[s][1]) / total;
            for x in 0..2 {
                let sg = sigma[s][x] / total;
                if sg > 0.0 {
                    let edge_mass = mu[s] * source.transition_prob(s, x as u8);
                    metrics[s][x] += sg / edge_mass * (sg / rho).log2();
                }
            }
        }
        // backward step to beta_{t-1}
        for s in 0..states {
            prev_beta[s] = (0..2u8)
                .map(|x| source.transition_prob(s, x) * f[usize::from(trellis.output(s, x))] * beta[trellis.next(s, x)])
                .sum();
        }
        let norm: f64 = prev_beta.iter().sum();
        if !(norm > 0.0) {
            return Err(Error::NonConvergence(format!("backward recursion lost all mass at step {t}")));
        }
        prev_beta.iter_mut().for_each(|b| *b /= norm);
        std::mem::swap(&mut beta, &mut prev_beta);
    }
    metrics.iter_mut().for_each(|m| {
        m[0] /= n as f64;
        m[1] /= n as f64;
    });
    Ok(metrics)
}

/// Maxentropic update on the weighted graph `W = 2^T`:
/// `P'(x | s) = W[s][x] v[next] / (lambda v[s])`.
fn maxentropic_update(trellis: &Trellis, metrics: &[[f64; 2]]) -> Result<Vec<f64>> {
    let states = trellis.num_states();
    let mut weights = vec![vec![0.0; states]; states];
    for (s, m) in metrics.iter().enumerate() {
        for x in [0u8, 1] {
            weights[s][trellis.next(s, x)] += m[usize::from(x)].exp2();
        }
    }
    let (lambda, v) = linalg::perron_pair(&weights, 1e-12, 1_000_000)
        .map_err(|e| Error::NonConvergence(format!("Perron iteration on edge weights: {e}")))?;
    (0..states)
        .map(|s| {
            let up = metrics[s][1].exp2() * v[trellis.next(s, 1)];
            let p = up / (lambda * v[s]);
            if p.is_finite() {
                Ok(p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
            } else {
                Err(Error::NonConvergence(format!("non-finite transition probability for state {s}")))
            }
        })
        .collect()
}

/// Averages a trellis-order source down to order `order` using its
/// stationary weights.
fn project(source: &MarkovSource, order: usize) -> Result<MarkovSource> {
    if order == source.order() {
        return Ok(source.clone());
    }
    let pi = source.stationary()?;
    let mask = (1usize << order) - 1;
    let mut num = vec![0.0; 1 << order];
    let mut den = vec![0.0; 1 << order];
    for (s, &w) in pi.iter().enumerate() {
        num[s & mask] += w * source.p_one(s);
        den[s & mask] += w;
    }
    let p = num
        .iter()
        .zip(&den)
        .zip(source.probabilities())
        .map(|((n, d), &fallback)| if *d > 0.0 { n / d } else { fallback })
        .collect();
    MarkovSource::new(order, p)
}

/// Generalized Blahut-Arimoto optimization of an order-`cfg.order` Markov
/// source on `channel`, starting from the uniform source.
pub fn gbaa_optimize(channel: &ChannelSpec, cfg: &GbaaConfig) -> Result<GbaaOutcome> {
    channel.noise.validate()?;
    cfg.validate()?;
    let trellis = Trellis::new(cfg.order, channel.refractory_len)?;
    let noise = channel.noise;

    let mut current = MarkovSource::bernoulli(cfg.order, 0.5)?;
    let mut trace: Vec<RateEstimate> = Vec::new();
    let mut best: Option<(usize, MarkovSource)> = None;

    for iter in 0..cfg.max_iters {
        let lifted = current.lift(trellis.memory())?;
        let mu = lifted.stationary()?;
        let mut sim_rng = rng::stream(cfg.seed, 1 + iter as u64);
        let metrics = edge_metrics(&trellis, &lifted, &mu, &noise, cfg.sample_len, &mut sim_rng)?;
        let p_one = maxentropic_update(&trellis, &metrics)?;
        let updated = MarkovSource::new(trellis.memory(), p_one)?;
        current = project(&updated, cfg.order)?;

        // common random numbers across iterates keep the trace comparable
        let estimate = estimate_on_trellis(
            &trellis,
            &current.lift(trellis.memory())?,
            &noise,
            cfg.sample_len,
            &mut rng::stream(cfg.seed, 0),
        )?;
        let improved = best
            .as_ref()
            .is_none_or(|(i, _)| estimate.rate > trace[*i].rate);
        trace.push(estimate);
        if improved {
            best = Some((iter, current.clone()));
        }
        if iter > 0 && (trace[iter].rate - trace[iter - 1].rate).abs() < cfg.rate_tol {
            break;
        }
    }

    let (best_iter, source) = best.expect("at least one iteration");
    Ok(GbaaOutcome {
        source,
        rate: trace[best_iter],
        trace,
        best_iter,
    })
}
