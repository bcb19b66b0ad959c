//! Built-in invariant checks behind `p300fsc selftest`.

use crate::channel::{ChannelSpec, ChannelState};
use crate::codebook::{Codebook, CodebookKind};
use crate::gbaa::estimate_rate;
use crate::rate::{self, entropy_rate, fixed_point_a, maxentropic_source, maxentropic_source_perron, rll_capacity_perron};
use crate::sim::Decoder;

/// Pieces of the checked pipeline that a caller may swap out, so the harness
/// itself can be tested against deliberately broken inputs.
#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    pub binary_entropy: fn(f64) -> f64,
    /// Allowed `|a - (1 - a)^(L+1)|` residual.
    pub fixed_point_tol: f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            binary_entropy: rate::binary_entropy,
            fixed_point_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run(hooks: &Hooks) -> Vec<Check> {
    let hb = hooks.binary_entropy;
    let mut out = Vec::new();

    let worst = (0..=10)
        .map(|l| {
            let a = fixed_point_a(l);
            (a - (1.0 - a).powi(l as i32 + 1)).abs()
        })
        .fold(0.0, f64::max);
    out.push(check(
        "fixed-point residual",
        worst < hooks.fixed_point_tol,
        format!("max residual {worst:.2e} (L = 0..10)"),
    ));

    let err = (fixed_point_a(1) - (3.0 - 5f64.sqrt()) / 2.0).abs();
    out.push(check("a*(1) = (3 - sqrt 5)/2", err < 1e-10, format!("error {err:.2e}")));

    let mut worst = 0.0f64;
    let mut failed = false;
    for l in 0..=8 {
        let a = fixed_point_a(l);
        let closed = hb(a) / (1.0 + l as f64 * a);
        match rll_capacity_perron(l) {
            Ok(p) => worst = worst.max((closed - p.rate).abs()),
            Err(_) => failed = true,
        }
    }
    out.push(check(
        "closed form = Perron capacity",
        !failed && worst < 1e-9,
        format!("max |diff| {worst:.2e} (L = 0..8)"),
    ));

    let mut worst = 0.0f64;
    for l in 1..=5 {
        let a = fixed_point_a(l);
        let closed = hb(a) / (1.0 + l as f64 * a);
        let h = maxentropic_source(l).and_then(|s| entropy_rate(&s)).unwrap_or(f64::NAN);
        worst = worst.max((h - closed).abs());
    }
    out.push(check(
        "maxentropic source achieves rate",
        worst < 1e-9,
        format!("max |diff| {worst:.2e} (L = 1..5)"),
    ));

    let mut worst = 0.0f64;
    for l in 1..=5 {
        match (maxentropic_source(l), maxentropic_source_perron(l)) {
            (Ok(a), Ok(b)) => {
                for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
                    worst = worst.max((p - q).abs());
                }
            }
            _ => worst = f64::INFINITY,
        }
    }
    out.push(check(
        "fixed-point and Perron sources agree",
        worst < 1e-9,
        format!("max |diff| {worst:.2e}"),
    ));

    let (mismatches, total) = decoder_oracle();
    out.push(check(
        "MAP decoder = exhaustive posterior",
        mismatches == 0,
        format!("{mismatches} mismatches over {total} outputs"),
    ));

    let est = maxentropic_source(1).and_then(|s| estimate_rate(&s, &ChannelSpec::noiseless(1), 20_000, 1));
    let target = {
        let a = fixed_point_a(1);
        hb(a) / (1.0 + a)
    };
    let (passed, detail) = match est {
        Ok(e) => ((e.rate - target).abs() < 0.02, format!("estimate {:.4} vs {target:.4}", e.rate)),
        Err(e) => (false, e.to_string()),
    };
    out.push(check("simulated rate matches closed form", passed, detail));
    out
}

/// Exhaustive check of the decoder on a 4 x 6 codebook over BSC(0.1), L = 1.
fn decoder_oracle() -> (usize, usize) {
    let rows = vec![
        vec![1, 1, 0, 0, 1, 0],
        vec![0, 1, 0, 1, 0, 1],
        vec![1, 0, 0, 1, 1, 1],
        vec![0, 0, 1, 0, 0, 1],
    ];
    let eps = 0.1;
    let channel = ChannelSpec::bsc(1, eps).expect("valid crossover");
    let book = Codebook::new(rows.clone(), CodebookKind::Imported { label: "selftest".into() }, 0).expect("valid book");
    let Ok(decoder) = Decoder::new(&book, &channel, ChannelState::Ground) else {
        return (1, 0);
    };
    // direct responses: a flash fires iff the previous flash was dark
    let z: Vec<Vec<u8>> = rows
        .iter()
        .map(|r| (0..r.len()).map(|n| u8::from(r[n] == 1 && (n == 0 || r[n - 1] == 0))).collect())
        .collect();
    let mut mismatches = 0;
    for bits in 0..64u32 {
        let y: Vec<f64> = (0..6).map(|k| f64::from((bits >> k) & 1)).collect();
        let post: Vec<f64> = z
            .iter()
            .map(|zw| zw.iter().zip(&y).map(|(&a, &b)| if f64::from(a) == b { 1.0 - eps } else { eps }).product())
            .collect();
        let mut best = 0;
        for w in 1..post.len() {
            // products taken in different orders differ in the last bits
            if post[w] > post[best] * (1.0 + 1e-12) {
                best = w;
            }
        }
        if decoder.decode(&y).ok() != Some(best) {
            mismatches += 1;
        }
    }
    (mismatches, 64)
}
